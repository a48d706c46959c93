#include "trimshift/norming.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trimshift/errors.hpp"

namespace trimshift {

PsiFunction PsiFunction::power(double delta) {
    if (!(delta > 0.0))
        throw DomainError("PsiFunction::power: delta must be positive for a summable family");
    return PsiFunction(Family::Power, delta);
}

PsiFunction PsiFunction::exp_poly(double c) {
    if (!(c > 0.0))
        throw DomainError("PsiFunction::exp_poly: c must be positive for a summable family");
    return PsiFunction(Family::ExpPoly, c);
}

double PsiFunction::log_value(long j) const {
    if (j < 1) throw DomainError("PsiFunction: argument must be a positive integer");
    switch (family_) {
        case Family::Power: return (1.0 + param_) * std::log(static_cast<double>(j));
        case Family::ExpPoly: return param_ * static_cast<double>(j);
    }
    return 0.0;
}

double PsiFunction::value(long j) const { return std::exp(log_value(j)); }

namespace {

long floor_log(long long n) { return static_cast<long>(std::floor(std::log(static_cast<double>(n)))); }

} // namespace

double c_eps_psi(double k, long long n, double eps, const PsiFunction& psi) {
    if (!(k >= 1.0)) throw DomainError("c_eps_psi: k must be at least 1");
    if (n < 3) throw DomainError("c_eps_psi: n must be at least 3");
    if (!(eps > 0.0 && eps < 0.25)) throw DomainError("c_eps_psi: eps must lie in (0,1/4)");
    const double lg = psi.log_value(floor_log(n));
    return std::pow(std::max(k, lg), 0.5 + eps) * std::pow(lg, 0.5 - eps);
}

double threshold_from_trim(long long b_n, long long n, double v, double eps,
                           const PsiFunction& psi, const Observable& observable) {
    if (b_n < 1) throw DomainError("threshold_from_trim: b_n must be at least 1");
    if (!(v >= 0.0)) throw DomainError("threshold_from_trim: V must be nonnegative");
    const double adjusted =
        static_cast<double>(b_n) - (v == 0.0 ? 0.0 : v * c_eps_psi(static_cast<double>(b_n), n, eps, psi));
    if (!(adjusted > 0.0 && adjusted < static_cast<double>(n)))
        throw ScheduleInfeasibleError("threshold_from_trim: b_n - V c(b_n,n) = " +
                                      std::to_string(adjusted) + " outside (0, n) at n = " +
                                      std::to_string(n));
    return observable.quantile(1.0 - adjusted / static_cast<double>(n));
}

long long trim_from_threshold(double f_n, long long n, double r_n, const Observable& observable) {
    if (!(r_n >= 0.0)) throw DomainError("trim_from_threshold: r_n must be nonnegative");
    const double raw = static_cast<double>(n) * observable.tail_prob(f_n) + r_n;
    const double b = std::ceil(raw);
    if (b > static_cast<double>(n))
        throw ScheduleInfeasibleError("trim_from_threshold: ceil(n mu(chi > f) + r) = " +
                                      std::to_string(b) + " exceeds n = " + std::to_string(n));
    return static_cast<long long>(b);
}

namespace {

double conjugate_fixed_point(const SlowlyVaryingFn& L, double x, int& iterations) {
    double y = 1.0;
    for (int it = 1; it <= 200; ++it) {
        const double lxy = L(x * y);
        if (!std::isfinite(lxy) || !(lxy > 0.0))
            throw ConjugateDivergedError("debruijn_conjugate: L(x y) left (0, inf) at x = " +
                                         std::to_string(x));
        const double next = 1.0 / lxy;
        const double rel = std::abs(next / y - 1.0);
        y = next;
        if (rel < 1e-10) {
            iterations = it;
            return y;
        }
    }
    throw ConjugateDivergedError(
        "debruijn_conjugate: fixed point did not settle within 200 iterations; supply a closed "
        "form instead");
}

} // namespace

ConjugateResult debruijn_conjugate(const SlowlyVaryingFn& L, double x) {
    if (!(x > 0.0)) throw DomainError("debruijn_conjugate: x must be positive");
    ConjugateResult result;
    result.value = conjugate_fixed_point(L, x, result.iterations);

    const double lx = L(x);
    if (!std::isfinite(lx) || !(lx > 0.0))
        throw ConjugateDivergedError("debruijn_conjugate: L(x) left (0, inf)");
    int it2 = 0;
    const double conj_at = conjugate_fixed_point(L, x * lx, it2);
    result.residual = std::abs(lx * conj_at - 1.0);
    return result;
}

double d_regvar(long long n, long long b_n, double alpha, const SlowlyVaryingFn& L) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("d_regvar: alpha must lie in (0,1)");
    if (!(b_n >= 1 && b_n < n)) throw DomainError("d_regvar: need 1 <= b_n < n");
    const double inv_alpha = 1.0 / alpha;
    const SlowlyVaryingFn l_alpha = [&](double x) { return std::pow(L(x), inv_alpha); };
    const double point = std::pow(static_cast<double>(n) / static_cast<double>(b_n), inv_alpha);
    const double conj = debruijn_conjugate(l_alpha, point).value;
    return alpha / (1.0 - alpha) * std::pow(static_cast<double>(n), inv_alpha) *
           std::pow(static_cast<double>(b_n), 1.0 - inv_alpha) * conj;
}

double d_regvar(long long n, long long b_n, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("d_regvar: alpha must lie in (0,1)");
    if (!(b_n >= 1 && b_n < n)) throw DomainError("d_regvar: need 1 <= b_n < n");
    const double inv_alpha = 1.0 / alpha;
    return alpha / (1.0 - alpha) * std::pow(static_cast<double>(n), inv_alpha) *
           std::pow(static_cast<double>(b_n), 1.0 - inv_alpha);
}

double d_stpete(long long n, long long b_n, double q, double eta, double r_constant) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("d_stpete: q must lie in (0,1)");
    if (!(eta > 1.0 / q)) throw DomainError("d_stpete: eta must exceed 1/q");
    if (!(r_constant > 0.0 && r_constant < 1.0 / q))
        throw DomainError("d_stpete: R must lie in (0, 1/q)");
    if (!(b_n >= 1 && b_n < n)) throw DomainError("d_stpete: need 1 <= b_n < n");
    const double t = std::log(eta) / std::log(q); // negative
    return eta / (q * eta - 1.0) * std::pow(r_constant * q, -t) * std::pow(1.0 - q, 1.0 + t) *
           std::pow(static_cast<double>(n), -t) * std::pow(static_cast<double>(b_n), 1.0 + t);
}

TrimSchedule TrimSchedule::power(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("TrimSchedule::power: beta must lie in (0,1)");
    TrimSchedule s;
    s.kind_ = Kind::Power;
    s.beta_ = beta;
    return s;
}

TrimSchedule TrimSchedule::st_petersburg(double q, double r_constant, double beta,
                                         PsiFunction psi) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("TrimSchedule: q must lie in (0,1)");
    if (!(r_constant > 0.0)) throw DomainError("TrimSchedule: R must be positive");
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("TrimSchedule: beta must lie in (0,1)");
    TrimSchedule s;
    s.kind_ = Kind::StPetersburg;
    s.q_ = q;
    s.r_ = r_constant;
    s.beta_ = beta;
    s.psi_.push_back(psi);
    return s;
}

TrimSchedule TrimSchedule::explicit_list(std::vector<long long> ns, std::vector<long long> bs) {
    if (ns.size() != bs.size() || ns.empty())
        throw DomainError("TrimSchedule::explicit_list: need matching nonempty n/b lists");
    TrimSchedule s;
    s.kind_ = Kind::Explicit;
    s.explicit_n_ = std::move(ns);
    s.explicit_b_ = std::move(bs);
    return s;
}

int TrimSchedule::level_index(long long n) const {
    if (kind_ != Kind::StPetersburg)
        throw DomainError("TrimSchedule::level_index: only defined for the St. Petersburg kind");
    if (n < 2) throw DomainError("TrimSchedule::level_index: n must be at least 2");
    const double log_inv_q = -std::log(q_);
    const double target = (1.0 - beta_) * std::log(static_cast<double>(n)) +
                          std::log(r_ / (1.0 - q_));
    const long long k = static_cast<long long>(std::ceil(target / log_inv_q));
    return static_cast<int>(std::max<long long>(1, k));
}

long long TrimSchedule::b(long long n) const {
    if (n < 1) throw DomainError("TrimSchedule::b: n must be positive");
    switch (kind_) {
        case Kind::Power: {
            const double raw = std::ceil(std::pow(static_cast<double>(n), beta_));
            return std::max<long long>(1, static_cast<long long>(raw));
        }
        case Kind::StPetersburg: {
            const int k = level_index(n);
            double qk = 1.0;
            for (int i = 0; i < k; ++i) qk *= q_;
            const double base = r_ / (1.0 - q_) * qk * static_cast<double>(n);
            const long j = static_cast<long>(std::floor(std::log(static_cast<double>(n))));
            const double lg = j >= 1 ? psi_.front().log_value(j) : 0.0;
            const double w = std::pow(qk * static_cast<double>(n), 0.55) * std::pow(lg, 0.45);
            return std::max<long long>(1, static_cast<long long>(std::ceil(base + w)));
        }
        case Kind::Explicit: {
            for (std::size_t i = 0; i < explicit_n_.size(); ++i)
                if (explicit_n_[i] == n) return explicit_b_[i];
            throw DomainError("TrimSchedule: explicit schedule has no entry for n = " +
                              std::to_string(n));
        }
    }
    throw DomainError("TrimSchedule: unknown kind");
}

ScheduleDiagnostic schedule_diagnostic(const TrimSchedule& schedule, const PsiFunction& psi,
                                       std::span<const long long> n_grid) {
    ScheduleDiagnostic diag;
    for (std::size_t i = 0; i + 1 < n_grid.size(); ++i)
        if (n_grid[i + 1] <= n_grid[i])
            throw DomainError("schedule_diagnostic: n grid must be strictly increasing");
    for (long long n : n_grid) {
        const long j = floor_log(n);
        const double lg = j >= 1 ? psi.log_value(j) : 0.0;
        const double ratio = static_cast<double>(schedule.b(n)) / lg;
        diag.rows.push_back({n, ratio});
    }
    for (std::size_t i = 0; i + 1 < diag.rows.size(); ++i)
        if (!(diag.rows[i + 1].ratio > diag.rows[i].ratio)) diag.warning = true;
    return diag;
}

} // namespace trimshift
