#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "trimshift/errors.hpp"

namespace trimshift {

using Symbol = std::uint8_t;

struct TransitionReport {
    bool irreducible = false;
    int period = 0; ///< gcd of diagonal return times found within k^2 powers; 0 if none
};

/// Classifies a 0/1 transition matrix (row-major, k x k).
/// Alphabets up to 64 symbols are supported; entries must be 0 or 1.
TransitionReport validate_transition(std::span<const int> row_major, int k);

/// One-sided subshift of finite type over a finite alphabet.
///
/// Construction validates the transition matrix: every row and column must
/// contain a 1, and the matrix must be irreducible and aperiodic. theta is
/// the base of the prefix metric and must lie in (0,1).
class ShiftSystem {
public:
    ShiftSystem(int alphabet_size, std::span<const int> transition_row_major, double theta);

    int alphabet_size() const { return k_; }
    double theta() const { return theta_; }

    bool edge(Symbol from, Symbol to) const {
        return adj_[static_cast<std::size_t>(from) * k_ + to] != 0;
    }

    const std::vector<Symbol>& successors(Symbol s) const { return succ_[s]; }
    const std::vector<Symbol>& predecessors(Symbol s) const { return pred_[s]; }

    /// True iff every adjacent pair is an allowed transition.
    /// Out-of-range symbols raise InvalidSymbolError.
    bool admissible(std::span<const Symbol> word) const;

    void check_symbol(Symbol s) const;

private:
    int k_;
    double theta_;
    std::vector<std::uint8_t> adj_;
    std::vector<std::vector<Symbol>> succ_;
    std::vector<std::vector<Symbol>> pred_;
};

/// Admissible finite word over a shift system. Length 0 is the empty word
/// (its cylinder is the whole space).
class Word {
public:
    Word() = default;
    Word(const ShiftSystem& system, std::vector<Symbol> symbols);

    std::span<const Symbol> symbols() const { return syms_; }
    std::size_t size() const { return syms_.size(); }
    bool empty() const { return syms_.empty(); }
    Symbol back() const { return syms_.back(); }

private:
    std::vector<Symbol> syms_;
};

bool is_admissible(std::span<const Symbol> word, const ShiftSystem& system);

/// Prefix metric theta^k, where k is the largest index (1-based) such that the
/// two prefixes agree on every position up to k. Throws InsufficientPrefixError
/// when the stored prefixes never disagree.
double d1_distance(std::span<const Symbol> x_prefix, std::span<const Symbol> y_prefix,
                   double theta);

using CylinderMeasureFn = std::function<double(std::span<const Symbol>)>;

/// Depth of the open measure-metric ball B(eps, x): the minimal k such that
/// the depth-k cylinder around x has measure strictly below eps (depth 0 is
/// the whole space, reached only when eps > 1). Throws InsufficientPrefixError
/// when the prefix is exhausted first.
int d2_ball_depth(std::span<const Symbol> x_prefix, double epsilon,
                  const CylinderMeasureFn& cylinder_measure);

/// All admissible one-symbol extensions of a word (all length-1 words when
/// the word is empty).
std::vector<Word> admissible_extensions(const ShiftSystem& system, const Word& word);

/// Lexicographic enumeration of all admissible words of the given length.
/// Throws ResourceError when the count would exceed max_count.
std::vector<std::vector<Symbol>> enumerate_words(const ShiftSystem& system, int length,
                                                 std::size_t max_count = (1u << 22));

} // namespace trimshift
