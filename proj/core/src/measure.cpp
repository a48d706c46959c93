#include "trimshift/measure.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trimshift/errors.hpp"

namespace trimshift {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kStationaryTol = 1e-13;
constexpr long kStationaryMaxIter = 1000000;

void check_stochastic(std::span<const double> p, int k) {
    if (k <= 0) throw InvalidMeasureError("stochastic matrix: alphabet size must be positive");
    if (p.size() != static_cast<std::size_t>(k) * k)
        throw InvalidMeasureError("stochastic matrix: expected " + std::to_string(k * k) +
                                  " entries, got " + std::to_string(p.size()));
    for (int i = 0; i < k; ++i) {
        double row = 0.0;
        for (int j = 0; j < k; ++j) {
            const double v = p[static_cast<std::size_t>(i) * k + j];
            if (!(v >= 0.0) || !(v <= 1.0))
                throw InvalidMeasureError("stochastic matrix: entry (" + std::to_string(i) + "," +
                                          std::to_string(j) + ") outside [0,1]");
            row += v;
        }
        if (std::abs(row - 1.0) > kRowSumTol)
            throw InvalidMeasureError("stochastic matrix: row " + std::to_string(i) +
                                      " sums to " + std::to_string(row));
    }
}

} // namespace

std::vector<double> stationary_distribution(std::span<const double> p_row_major, int k) {
    check_stochastic(p_row_major, k);

    std::vector<double> v(static_cast<std::size_t>(k), 1.0 / k);
    std::vector<double> w(static_cast<std::size_t>(k), 0.0);
    for (long iter = 0; iter < kStationaryMaxIter; ++iter) {
        // w = v P
        std::fill(w.begin(), w.end(), 0.0);
        for (int i = 0; i < k; ++i) {
            const double vi = v[i];
            if (vi == 0.0) continue;
            const double* row = p_row_major.data() + static_cast<std::size_t>(i) * k;
            for (int j = 0; j < k; ++j) w[j] += vi * row[j];
        }
        double sum = 0.0, resid = 0.0;
        for (int j = 0; j < k; ++j) {
            resid = std::max(resid, std::abs(w[j] - v[j]));
            sum += w[j];
        }
        for (int j = 0; j < k; ++j) v[j] = w[j] / sum;
        if (resid <= kStationaryTol) return v;
    }
    throw ConvergenceError("stationary_distribution: no convergence within 1e6 iterations");
}

MarkovMeasure::MarkovMeasure(ShiftSystem system, std::vector<double> stochastic_row_major)
    : system_(std::move(system)), p_(std::move(stochastic_row_major)) {
    const int k = system_.alphabet_size();
    check_stochastic(p_, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const bool zero = p_[static_cast<std::size_t>(i) * k + j] == 0.0;
            const bool allowed = system_.edge(static_cast<Symbol>(i), static_cast<Symbol>(j));
            if (zero == allowed)
                throw InvalidMeasureError(
                    "stochastic matrix: entry (" + std::to_string(i) + "," + std::to_string(j) +
                    ") must be zero exactly when the transition entry is zero");
        }
    pi_ = stationary_distribution(p_, k);
}

double MarkovMeasure::cylinder_measure(std::span<const Symbol> word) const {
    for (Symbol s : word) system_.check_symbol(s);
    if (word.empty()) return 1.0;
    double m = pi_[word[0]];
    for (std::size_t i = 0; i + 1 < word.size(); ++i) {
        m *= stochastic(word[i], word[i + 1]);
        if (m == 0.0) return 0.0;
    }
    return m;
}

double MarkovMeasure::g_weight(Symbol a, Symbol y1) const {
    system_.check_symbol(a);
    system_.check_symbol(y1);
    if (!system_.edge(a, y1)) return 0.0;
    return pi_[a] * stochastic(a, y1) / pi_[y1];
}

double MarkovMeasure::g_function(Symbol a, std::span<const Symbol> suffix) const {
    if (suffix.empty()) throw DomainError("g_function: suffix must be nonempty");
    for (Symbol s : suffix) system_.check_symbol(s);
    return g_weight(a, suffix[0]);
}

GibbsBracket MarkovMeasure::verify_gibbs(int depth_max) const {
    if (depth_max < 0) throw DomainError("verify_gibbs: depth must be nonnegative");
    if (depth_max > 16)
        throw ResourceError("verify_gibbs: depth " + std::to_string(depth_max) +
                            " exceeds the exhaustive-enumeration cap of 16");

    GibbsBracket bracket{1.0, 1.0}; // empty word has ratio exactly 1
    for (int len = 1; len <= depth_max; ++len) {
        const auto words = enumerate_words(system_, len, 1u << 21);
        for (const auto& w : words) {
            // Evaluate S_n log g on w extended by its smallest admissible
            // continuation symbol.
            const Symbol cont = system_.successors(w.back()).front();
            double log_sum = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                const Symbol next = (i + 1 < w.size()) ? w[i + 1] : cont;
                log_sum += std::log(g_weight(w[i], next));
            }
            const double ratio = cylinder_measure(w) / std::exp(log_sum);
            bracket.lower = std::min(bracket.lower, ratio);
            bracket.upper = std::max(bracket.upper, ratio);
        }
    }
    return bracket;
}

TrajectorySampler::TrajectorySampler(const MarkovMeasure& measure, std::uint64_t master_seed,
                                     std::uint64_t path_index)
    : measure_(&measure),
      master_seed_(master_seed),
      path_index_(path_index),
      rng_(make_path_rng(master_seed, path_index)) {
    const int k = measure.alphabet_size();
    init_cdf_.resize(k);
    row_cdf_.resize(static_cast<std::size_t>(k) * k);
    row_last_.resize(k);
    double acc = 0.0;
    for (int j = 0; j < k; ++j) {
        acc += measure.stationary(static_cast<Symbol>(j));
        init_cdf_[j] = acc;
        if (measure.stationary(static_cast<Symbol>(j)) > 0.0) init_last_ = static_cast<Symbol>(j);
    }
    for (int i = 0; i < k; ++i) {
        acc = 0.0;
        for (int j = 0; j < k; ++j) {
            const double pij = measure.stochastic(static_cast<Symbol>(i), static_cast<Symbol>(j));
            acc += pij;
            row_cdf_[static_cast<std::size_t>(i) * k + j] = acc;
            if (pij > 0.0) row_last_[i] = static_cast<Symbol>(j);
        }
    }
}

Symbol TrajectorySampler::draw(std::span<const double> cdf, Symbol fallback) {
    const double u = rng_.next_unit();
    for (std::size_t j = 0; j + 1 < cdf.size(); ++j)
        if (u < cdf[j]) return static_cast<Symbol>(j);
    // The last positive-mass symbol absorbs any rounding slack in the row sum.
    return fallback;
}

Symbol TrajectorySampler::next() {
    const int k = measure_->alphabet_size();
    Symbol s;
    if (!started_) {
        s = draw(init_cdf_, init_last_);
        started_ = true;
    } else {
        s = draw(std::span<const double>(row_cdf_.data() + static_cast<std::size_t>(prev_) * k,
                                         static_cast<std::size_t>(k)),
                 row_last_[prev_]);
    }
    prev_ = s;
    return s;
}

std::vector<Symbol> sample_stream(TrajectorySampler& sampler, std::size_t n) {
    if (n == 0) throw DomainError("sample_stream: n must be at least 1");
    std::vector<Symbol> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sampler.next());
    return out;
}

} // namespace trimshift
