#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trimshift/kahan.hpp"

namespace trimshift {

/// Streaming accumulator for Birkhoff sums with trimmed and truncated reads.
///
/// Keeps a compensated running total, the full value store, and a bounded
/// min-heap holding the largest min(count, topk_capacity) values observed
/// (multiset-correct under ties). trimmed_sum(b) is served from the heap for
/// b <= topk_capacity and from the store otherwise.
class TrimAccumulator {
public:
    explicit TrimAccumulator(std::size_t topk_capacity = std::size_t{1} << 16);

    /// O(log topk_capacity); rejects negative or non-finite values.
    void push(double value);

    std::size_t count() const { return values_.size(); }
    double total() const { return total_.value(); } ///< S_n
    double max_value() const;

    /// S_n^b: the running total minus the b largest values, re-summed from
    /// the store whenever the subtraction would cancel badly. b > count is a
    /// domain error; b == count returns exactly 0.
    double trimmed_sum(std::size_t b) const;

    /// T_n^f: compensated sum of all values <= f.
    double truncated_sum(double f) const;

    std::size_t count_above(double f) const;
    std::size_t count_equal(double f) const;

    const std::vector<double>& values() const { return values_; }
    std::size_t topk_capacity() const { return bmax_; }

private:
    double store_trimmed(std::size_t b) const;

    std::size_t bmax_;
    std::vector<double> values_;
    std::vector<double> heap_; // min-heap of the current top-k
    KahanSum total_;
};

/// Reference semantics for S_n^b: sort descending, drop the first b, sum the
/// rest with compensation.
double oracle_trimmed(std::span<const double> values, std::size_t b);

} // namespace trimshift
