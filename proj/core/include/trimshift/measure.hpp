#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trimshift/rng.hpp"
#include "trimshift/shift.hpp"

namespace trimshift {

/// Unique stationary probability vector of a row-stochastic matrix, computed
/// by power iteration from the uniform vector. Residual ||pi P - pi||_inf
/// is driven below 1e-13; more than 1e6 sweeps raises ConvergenceError.
std::vector<double> stationary_distribution(std::span<const double> p_row_major, int k);

struct GibbsBracket {
    double lower = 0.0;
    double upper = 0.0;
};

/// Stationary Markov measure on a subshift of finite type.
///
/// The stochastic matrix must carry a zero exactly where the transition
/// matrix does, and rows must sum to one within 1e-12. Cylinder masses are
/// the exact products pi_{i1} * p_{i1,i2} * ... and the induced g-function
/// weight of prepending symbol a to a point starting with y1 is
/// pi_a * p_{a,y1} / pi_{y1}.
class MarkovMeasure {
public:
    MarkovMeasure(ShiftSystem system, std::vector<double> stochastic_row_major);

    const ShiftSystem& system() const { return system_; }
    int alphabet_size() const { return system_.alphabet_size(); }

    double stochastic(Symbol i, Symbol j) const {
        return p_[static_cast<std::size_t>(i) * alphabet_size() + j];
    }
    double stationary(Symbol i) const { return pi_[i]; }
    std::span<const double> stationary_vector() const { return pi_; }
    std::span<const double> stochastic_matrix() const { return p_; }

    /// Exact cylinder mass; 0 for an inadmissible word, 1 for the empty word.
    double cylinder_measure(std::span<const Symbol> word) const;
    double cylinder_measure(const Word& word) const { return cylinder_measure(word.symbols()); }

    /// g-weight of the one-step preimage a.y; 0 when (a, y1) is not an edge.
    double g_weight(Symbol a, Symbol y1) const;
    /// Same, with the suffix given as a word (must be nonempty).
    double g_function(Symbol a, std::span<const Symbol> suffix) const;

    /// Exhaustively brackets mu([A]) / exp(S_n log g) over all admissible
    /// words of length <= depth_max, evaluating the Birkhoff sum on the
    /// lexicographically smallest admissible continuation of each word.
    GibbsBracket verify_gibbs(int depth_max) const;

private:
    ShiftSystem system_;
    std::vector<double> p_;
    std::vector<double> pi_;
};

/// Deterministic per-path symbol stream: first symbol from the stationary
/// vector, then rows of the stochastic matrix, all driven by the
/// (master_seed, path_index) generator from rng.hpp.
class TrajectorySampler {
public:
    TrajectorySampler(const MarkovMeasure& measure, std::uint64_t master_seed,
                      std::uint64_t path_index);

    Symbol next();

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t path_index() const { return path_index_; }

private:
    Symbol draw(std::span<const double> cdf, Symbol fallback);

    const MarkovMeasure* measure_;
    std::uint64_t master_seed_;
    std::uint64_t path_index_;
    Xoshiro256pp rng_;
    std::vector<double> init_cdf_;
    std::vector<double> row_cdf_;    // k rows of length k
    std::vector<Symbol> row_last_;   // last positive-mass symbol per row
    Symbol init_last_ = 0;
    bool started_ = false;
    Symbol prev_ = 0;
};

std::vector<Symbol> sample_stream(TrajectorySampler& sampler, std::size_t n);

} // namespace trimshift
