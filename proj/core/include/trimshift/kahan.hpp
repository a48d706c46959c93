#pragma once

#include <span>

namespace trimshift {

/// Compensated (Kahan) accumulator.
class KahanSum {
public:
    KahanSum() = default;
    explicit KahanSum(double init) : sum_(init) {}

    KahanSum& operator+=(double v) {
        const double y = v - c_;
        const double t = sum_ + y;
        c_ = (t - sum_) - y;
        sum_ = t;
        return *this;
    }

    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

inline double kahan_total(std::span<const double> xs) {
    KahanSum s;
    for (double x : xs) s += x;
    return s.value();
}

} // namespace trimshift
