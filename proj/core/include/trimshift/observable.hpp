#pragma once

#include <cstdint>
#include <span>

#include "trimshift/measure.hpp"

namespace trimshift {

/// Nonnegative observable on the shift, evaluated from a finite lookahead of
/// the symbol stream, together with its exact tail / quantile / truncated
/// moment calculus.
class Observable {
public:
    virtual ~Observable() = default;

    /// Value at the point whose first symbols are `lookahead`. The span must
    /// provide at least lookahead_window() symbols unless the value is
    /// determined earlier.
    virtual double eval(std::span<const Symbol> lookahead) const = 0;
    virtual std::size_t lookahead_window() const = 0;

    virtual double tail_prob(double level) const = 0;               // mu(chi > level)
    virtual double quantile(double u) const = 0;                    // F^{<-}(u), u in (0,1)
    virtual double expected_truncated(double level) const = 0;      // E[chi; chi <= level]
    virtual const char* family() const = 0;
};

/// Geometric-tail observable eta^(m-1), where m is the 1-based position of
/// the first symbol different from the special one. Requires eta > 1/q with
/// q the special symbol's self-transition probability.
class ReturnTimeObservable final : public Observable {
public:
    ReturnTimeObservable(const MarkovMeasure& measure, Symbol special_symbol, double eta,
                         int depth_cap = 100);

    double eval(std::span<const Symbol> lookahead) const override;
    std::size_t lookahead_window() const override { return static_cast<std::size_t>(depth_cap_); }

    /// mu(chi = eta^k): 1 - pi_s at k = 0, pi_s q^(k-1) (1-q) for k >= 1.
    double level_prob(int k) const;
    /// eta^k by iterated multiplication (the canonical atom values).
    double level_value(int k) const;
    /// Largest k with eta^k <= level (level >= 1).
    int floor_level_index(double level) const;

    double tail_prob(double level) const override;
    double quantile(double u) const override;
    double expected_truncated(double level) const override;
    const char* family() const override { return "return_time"; }

    double eta() const { return eta_; }
    double q() const { return q_; }
    double special_mass() const { return pi1_; }
    Symbol special_symbol() const { return special_; }
    int depth_cap() const { return depth_cap_; }
    const MarkovMeasure& measure() const { return measure_; }

    /// Constant C of the geometric level law mu(chi = eta^k) = C q^k (k >= 1),
    /// i.e. pi_s (1-q)/q. The alternative convention pi_s/q is special_mass()/q().
    double level_constant() const { return pi1_ * (1.0 - q_) / q_; }

private:
    double tail_at_atom(int k) const; // mu(chi > eta^k) = pi_s q^k

    MarkovMeasure measure_; // owned copy; the type stays freely movable
    Symbol special_;
    double eta_;
    double q_;
    double pi1_;
    int depth_cap_;
};

/// Pareto observable (1 - u(x))^(-1/alpha) on the full 2-shift, where u(x)
/// is the dyadic expansion read from the symbol stream. With the fair
/// Bernoulli measure its tail is exactly t^(-alpha) for t >= 1.
///
/// Evaluation reads the first digit_cap digits as a big-endian integer U and
/// returns (2^digit_cap - U) * 2^-digit_cap raised to -1/alpha, so the
/// truncation error is at most 2^-(digit_cap - m) relative, m the position
/// of the first zero digit. Streams whose first zero digit lies beyond
/// digit_cap - 28 abort with CapExceededError rather than degrade.
class ParetoObservable final : public Observable {
public:
    explicit ParetoObservable(double alpha, int digit_cap = 128);

    double eval(std::span<const Symbol> lookahead) const override;
    std::size_t lookahead_window() const override { return static_cast<std::size_t>(digit_cap_); }

    /// Core evaluation from a packed bit window: digits are the top digit_cap
    /// bits of (hi, lo), most significant first.
    double value_from_bits(std::uint64_t hi, std::uint64_t lo) const;

    double tail_prob(double level) const override;
    double quantile(double u) const override;
    double expected_truncated(double level) const override;
    const char* family() const override { return "pareto"; }

    double alpha() const { return alpha_; }
    int digit_cap() const { return digit_cap_; }
    int zero_scan_limit() const { return digit_cap_ - 28; }

private:
    double alpha_;
    int digit_cap_;
};

/// chi * 1{chi <= level}.
class TruncatedObservable {
public:
    TruncatedObservable(const Observable& base, double level);

    double eval(std::span<const Symbol> lookahead) const {
        const double v = base_->eval(lookahead);
        return v <= level_ ? v : 0.0;
    }
    double level() const { return level_; }
    const Observable& base() const { return *base_; }

private:
    const Observable* base_;
    double level_;
};

} // namespace trimshift
