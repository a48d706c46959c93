#include "trimshift/trimming.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "trimshift/errors.hpp"

namespace trimshift {

TrimAccumulator::TrimAccumulator(std::size_t topk_capacity) : bmax_(topk_capacity) {
    heap_.reserve(std::min<std::size_t>(bmax_, 1u << 16));
}

void TrimAccumulator::push(double value) {
    if (!(value >= 0.0) || !std::isfinite(value))
        throw DomainError("TrimAccumulator::push: value must be finite and nonnegative");
    values_.push_back(value);
    total_ += value;
    if (bmax_ == 0) return;
    if (heap_.size() < bmax_) {
        heap_.push_back(value);
        std::push_heap(heap_.begin(), heap_.end(), std::greater<>{});
    } else if (value > heap_.front()) {
        std::pop_heap(heap_.begin(), heap_.end(), std::greater<>{});
        heap_.back() = value;
        std::push_heap(heap_.begin(), heap_.end(), std::greater<>{});
    }
}

double TrimAccumulator::max_value() const {
    if (values_.empty()) throw DomainError("TrimAccumulator::max_value: empty accumulator");
    if (!heap_.empty()) return *std::max_element(heap_.begin(), heap_.end());
    return *std::max_element(values_.begin(), values_.end());
}

double TrimAccumulator::trimmed_sum(std::size_t b) const {
    if (b > count())
        throw DomainError("trimmed_sum: b = " + std::to_string(b) + " exceeds count = " +
                          std::to_string(count()));
    if (b == count()) return 0.0;
    if (b == 0) return total();

    if (b <= heap_.size()) {
        // The heap holds the top min(count, bmax) values, so the b largest
        // overall are the b largest heap entries.
        std::vector<double> top(heap_);
        std::nth_element(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(b - 1), top.end(),
                         std::greater<>{});
        std::sort(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(b), std::greater<>{});
        KahanSum removed;
        for (std::size_t i = 0; i < b; ++i) removed += top[i];
        const double result = total() - removed.value();
        // The subtraction cancels against the full total; when the removed
        // mass dominates, resum the kept values for full relative accuracy.
        if (std::abs(result) >= 1e-5 * total()) return result;
    }
    return store_trimmed(b);
}

double TrimAccumulator::store_trimmed(std::size_t b) const {
    std::vector<double> kept(values_);
    const std::size_t keep = count() - b;
    std::nth_element(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(keep), kept.end());
    std::sort(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(keep));
    KahanSum sum;
    for (std::size_t i = 0; i < keep; ++i) sum += kept[i];
    return sum.value();
}

double TrimAccumulator::truncated_sum(double f) const {
    if (std::isnan(f)) throw DomainError("truncated_sum: threshold is NaN");
    KahanSum sum;
    for (double v : values_)
        if (v <= f) sum += v;
    return sum.value();
}

std::size_t TrimAccumulator::count_above(double f) const {
    std::size_t n = 0;
    for (double v : values_)
        if (v > f) ++n;
    return n;
}

std::size_t TrimAccumulator::count_equal(double f) const {
    std::size_t n = 0;
    for (double v : values_)
        if (v == f) ++n;
    return n;
}

double oracle_trimmed(std::span<const double> values, std::size_t b) {
    if (b > values.size()) throw DomainError("oracle_trimmed: b exceeds the number of values");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>{});
    KahanSum sum;
    for (std::size_t i = b; i < sorted.size(); ++i) sum += sorted[i];
    return sum.value();
}

} // namespace trimshift
