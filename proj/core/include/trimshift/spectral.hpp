#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "trimshift/measure.hpp"
#include "trimshift/observable.hpp"

namespace trimshift {

/// Lexicographic index of all admissible words of a fixed length.
class WordIndex {
public:
    WordIndex(const ShiftSystem& system, int depth);

    int depth() const { return depth_; }
    std::size_t size() const { return count_; }
    const ShiftSystem& system() const { return system_; }

    std::span<const Symbol> word(std::size_t i) const {
        return {flat_.data() + i * static_cast<std::size_t>(depth_),
                static_cast<std::size_t>(depth_)};
    }

    /// Rank of an admissible word of length depth(); size() when absent.
    std::size_t rank(std::span<const Symbol> w) const;

    /// Half-open index range of all depth-words extending the given prefix
    /// (empty range when the prefix heads an empty cylinder).
    std::pair<std::size_t, std::size_t> prefix_range(std::span<const Symbol> prefix) const;

private:
    ShiftSystem system_;
    int depth_;
    std::size_t count_ = 0;
    std::vector<Symbol> flat_;
};

/// Function constant on cylinders of a fixed depth, stored on a WordIndex.
class CylinderFunction {
public:
    CylinderFunction(std::shared_ptr<const WordIndex> index, std::vector<double> values);

    static CylinderFunction from_function(
        std::shared_ptr<const WordIndex> index,
        const std::function<double(std::span<const Symbol>)>& f);

    int depth() const { return index_->depth(); }
    std::size_t size() const { return index_->size(); }
    const WordIndex& index() const { return *index_; }
    std::shared_ptr<const WordIndex> index_ptr() const { return index_; }
    std::span<const double> values() const { return values_; }
    double value(std::size_t i) const { return values_[i]; }

private:
    std::shared_ptr<const WordIndex> index_;
    std::vector<double> values_;
};

/// Finite-rank transfer matrix of the Markov g-potential on depth-m cylinder
/// functions. Row u, column v holds the g-weight of the preimage branch that
/// maps cylinder [v] onto [u] under the shift; rows sum to one.
struct TransferMatrix {
    std::shared_ptr<const WordIndex> index;
    std::vector<double> entries; // row-major, dim x dim

    std::size_t dim() const { return index->size(); }
    int depth() const { return index->depth(); }
    double at(std::size_t row, std::size_t col) const { return entries[row * dim() + col]; }
};

/// Depth must lie in [1, 12]; larger bases raise ResourceError.
TransferMatrix assemble_transfer(const MarkovMeasure& measure, int depth);

struct EigenPair {
    double lambda = 0.0;
    std::vector<double> eigvec; ///< left eigenvector (cylinder masses), unit sum
    int iterations = 0;
};

/// Leading eigenpair by power iteration from the uniform vector.
EigenPair leading_eigenpair(const TransferMatrix& transfer);

/// Modulus of the second-largest eigenvalue, by Wielandt deflation of the
/// leading pair followed by power iteration with a two-term recurrence fit
/// (robust to complex pairs). Values >= 1 - 1e-8 raise GapViolationError.
double spectral_gap(const TransferMatrix& transfer);

/// Apply the transfer matrix to a cylinder function on the same index.
CylinderFunction apply_transfer(const TransferMatrix& transfer, const CylinderFunction& h);

/// osc(h, [word]): max minus min of h over the cylinder of the word; 0 for an
/// empty cylinder or when h is constant there.
double oscillation(const CylinderFunction& h, std::span<const Symbol> word);

/// Quasi-Hoelder seminorm |h|_{eps0} = sup_{0 < eps <= eps0} of the mu-average
/// oscillation over open measure-metric balls, divided by eps.
///
/// For a depth-m cylinder function the map eps -> integral is a step function
/// whose jumps sit on cylinder-measure values of depth < m, so the sup is
/// evaluated exactly over that breakpoint set, taking the limit as eps
/// decreases to each breakpoint.
double quasi_holder_seminorm(const CylinderFunction& h, double eps0, const MarkovMeasure& measure);

struct PropertyAuditRow {
    double level = 0.0;
    double truncated_ratio = 0.0;   ///< |level-truncated chi| / level
    double exceedance_norm = 0.0;   ///< |1{chi >= level}|
    double atom_norm = 0.0;         ///< |1{chi = level}|
};

struct PropertyAudit {
    double k1_hat = 0.0;
    double k2_hat = 0.0;
    double k3_hat = 0.0;
    std::vector<PropertyAuditRow> rows;
};

/// Seminorm audit of the truncation family over a grid of levels. Only
/// observables whose truncations are cylinder-measurable are supported
/// (the return-time observable is; the Pareto observable is not).
PropertyAudit property_f_audit(const ReturnTimeObservable& chi, const MarkovMeasure& measure,
                               double eps0, std::span<const double> levels);
PropertyAudit property_f_audit(const Observable& chi, const MarkovMeasure& measure, double eps0,
                               std::span<const double> levels);

/// Cylinder representations of the audited functions (exposed for tests).
CylinderFunction truncated_level_function(const ReturnTimeObservable& chi,
                                          const MarkovMeasure& measure, double level);
CylinderFunction exceedance_indicator(const ReturnTimeObservable& chi,
                                      const MarkovMeasure& measure, double level);
CylinderFunction atom_indicator(const ReturnTimeObservable& chi, const MarkovMeasure& measure,
                                double level);

} // namespace trimshift
