#include "trimshift/observable.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "trimshift/errors.hpp"
#include "trimshift/kahan.hpp"

namespace trimshift {

ReturnTimeObservable::ReturnTimeObservable(const MarkovMeasure& measure, Symbol special_symbol,
                                           double eta, int depth_cap)
    : measure_(measure), special_(special_symbol), eta_(eta), depth_cap_(depth_cap) {
    measure.system().check_symbol(special_symbol);
    q_ = measure.stochastic(special_, special_);
    pi1_ = measure.stationary(special_);
    if (!(q_ > 0.0))
        throw DomainError("ReturnTimeObservable: the special symbol needs a positive "
                          "self-transition probability, got q = " +
                          std::to_string(q_));
    if (!(eta > 1.0 / q_))
        throw DomainError("ReturnTimeObservable: eta must exceed 1/q (eta = " +
                          std::to_string(eta) + ", 1/q = " + std::to_string(1.0 / q_) + ")");
    if (depth_cap < 1) throw DomainError("ReturnTimeObservable: depth_cap must be at least 1");
}

double ReturnTimeObservable::eval(std::span<const Symbol> lookahead) const {
    const std::size_t scan = std::min(lookahead.size(), static_cast<std::size_t>(depth_cap_));
    double value = 1.0;
    for (std::size_t i = 0; i < scan; ++i) {
        if (lookahead[i] != special_) return value; // m = i + 1, value = eta^i
        value *= eta_;
    }
    if (lookahead.size() < static_cast<std::size_t>(depth_cap_))
        throw InsufficientPrefixError(
            "ReturnTimeObservable: prefix shorter than depth_cap with no non-special symbol");
    throw CapExceededError("ReturnTimeObservable: no symbol differs from the special one within "
                           "depth_cap = " +
                           std::to_string(depth_cap_));
}

double ReturnTimeObservable::tail_at_atom(int k) const {
    double t = pi1_;
    for (int i = 0; i < k; ++i) t *= q_;
    return t;
}

double ReturnTimeObservable::level_prob(int k) const {
    if (k < 0) throw DomainError("level_prob: k must be nonnegative");
    if (k == 0) return 1.0 - pi1_;
    return tail_at_atom(k - 1) - tail_at_atom(k);
}

double ReturnTimeObservable::level_value(int k) const {
    if (k < 0) throw DomainError("level_value: k must be nonnegative");
    double v = 1.0;
    for (int i = 0; i < k; ++i) v *= eta_;
    return v;
}

int ReturnTimeObservable::floor_level_index(double level) const {
    if (!(level >= 1.0)) throw DomainError("floor_level_index: level must be >= 1");
    int k = 0;
    double pw = 1.0;
    while (pw * eta_ <= level) {
        pw *= eta_;
        ++k;
    }
    return k;
}

double ReturnTimeObservable::tail_prob(double level) const {
    if (!(level >= 0.0)) throw DomainError("tail_prob: level must be nonnegative");
    if (level < 1.0) return 1.0;
    return tail_at_atom(floor_level_index(level));
}

double ReturnTimeObservable::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile: u must lie in (0,1)");
    const double target = 1.0 - u;
    int k = 0;
    double t = pi1_; // mu(chi > eta^k)
    while (t > target) {
        t *= q_;
        if (++k > 1000000) throw ConvergenceError("quantile: atom search did not terminate");
    }
    return level_value(k);
}

double ReturnTimeObservable::expected_truncated(double level) const {
    if (std::isinf(level))
        throw NonIntegrableError("expected_truncated: chi is non-integrable, level must be finite");
    if (!(level >= 0.0)) throw DomainError("expected_truncated: level must be nonnegative");
    if (level < 1.0) return 0.0;
    const int kmax = floor_level_index(level);
    KahanSum sum;
    double value = 1.0; // eta^k
    for (int k = 0; k <= kmax; ++k) {
        sum += level_prob(k) * value;
        value *= eta_;
    }
    return sum.value();
}

ParetoObservable::ParetoObservable(double alpha, int digit_cap)
    : alpha_(alpha), digit_cap_(digit_cap) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("ParetoObservable: alpha must lie in (0,1), got " +
                          std::to_string(alpha));
    if (digit_cap < 32 || digit_cap > 128)
        throw DomainError("ParetoObservable: digit_cap must lie in [32,128], got " +
                          std::to_string(digit_cap));
}

double ParetoObservable::value_from_bits(std::uint64_t hi, std::uint64_t lo) const {
    const int cap = digit_cap_;

    // Position of the first zero digit (1-based) among the top cap bits. Bits
    // beyond the cap may hold future digits; the clamp keeps them irrelevant.
    int leading_ones = std::countl_one(hi);
    if (cap > 64 && leading_ones == 64) leading_ones += std::countl_one(lo);
    if (leading_ones > cap) leading_ones = cap;
    if (leading_ones >= zero_scan_limit())
        throw CapExceededError("ParetoObservable: first zero digit beyond position " +
                               std::to_string(zero_scan_limit()));

    double base;
    if (cap <= 64) {
        const std::uint64_t u = hi >> (64 - cap);
        if (u == 0) {
            base = 1.0; // all digits zero: 1 - u(x) = 1
        } else {
            const std::uint64_t v =
                (cap == 64) ? std::uint64_t{0} - u : (std::uint64_t{1} << cap) - u;
            base = std::ldexp(static_cast<double>(v), -cap);
        }
    } else {
        // U = u_hi * 2^lo_bits + u_lo over cap bits; V = 2^cap - U via a
        // two's-complement negate split across the two words.
        const int lo_bits = cap - 64;
        const std::uint64_t lo_mask =
            (lo_bits == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << lo_bits) - 1);
        const std::uint64_t u_hi = hi;
        const std::uint64_t u_lo = lo >> (64 - lo_bits);
        if (u_hi == 0 && u_lo == 0) {
            base = 1.0;
        } else {
            const std::uint64_t v_lo = (std::uint64_t{0} - u_lo) & lo_mask;
            const std::uint64_t v_hi = ~u_hi + (u_lo == 0 ? 1 : 0);
            base = std::ldexp(static_cast<double>(v_hi), lo_bits - cap) +
                   std::ldexp(static_cast<double>(v_lo), -cap);
        }
    }
    return std::pow(base, -1.0 / alpha_);
}

double ParetoObservable::eval(std::span<const Symbol> lookahead) const {
    if (lookahead.size() < static_cast<std::size_t>(digit_cap_))
        throw InsufficientPrefixError("ParetoObservable: lookahead shorter than digit_cap");
    std::uint64_t hi = 0, lo = 0;
    for (int j = 0; j < digit_cap_ && j < 64; ++j)
        if (lookahead[j] & 1) hi |= (std::uint64_t{1} << (63 - j));
    for (int j = 64; j < digit_cap_; ++j)
        if (lookahead[j] & 1) lo |= (std::uint64_t{1} << (63 - (j - 64)));
    return value_from_bits(hi, lo);
}

double ParetoObservable::tail_prob(double level) const {
    if (!(level >= 0.0)) throw DomainError("tail_prob: level must be nonnegative");
    if (level <= 1.0) return 1.0;
    return std::pow(level, -alpha_);
}

double ParetoObservable::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile: u must lie in (0,1)");
    return std::pow(1.0 - u, -1.0 / alpha_);
}

double ParetoObservable::expected_truncated(double level) const {
    if (std::isinf(level))
        throw NonIntegrableError("expected_truncated: chi is non-integrable, level must be finite");
    if (!(level >= 0.0)) throw DomainError("expected_truncated: level must be nonnegative");
    if (level < 1.0) return 0.0;
    return alpha_ / (1.0 - alpha_) * (std::pow(level, 1.0 - alpha_) - 1.0);
}

TruncatedObservable::TruncatedObservable(const Observable& base, double level)
    : base_(&base), level_(level) {
    if (!(level >= 0.0)) throw DomainError("TruncatedObservable: level must be nonnegative");
}

} // namespace trimshift
