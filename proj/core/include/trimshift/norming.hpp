#pragma once

#include <functional>
#include <span>
#include <vector>

#include "trimshift/observable.hpp"

namespace trimshift {

/// Positive integer function with summable reciprocals. Two built-in
/// families: power(delta) is u(j) = j^(1+delta) (delta > 0) and
/// exp_poly(c) is u(j) = exp(c j) (c > 0).
class PsiFunction {
public:
    enum class Family { Power, ExpPoly };

    static PsiFunction power(double delta);
    static PsiFunction exp_poly(double c);

    double value(long j) const;
    double log_value(long j) const;
    Family family() const { return family_; }
    double parameter() const { return param_; }

private:
    PsiFunction(Family f, double p) : family_(f), param_(p) {}
    Family family_;
    double param_;
};

/// c_{eps,psi}(k, n) = max(k, log psi(floor(log n)))^(1/2+eps)
///                   * log psi(floor(log n))^(1/2-eps),
/// for k >= 1, n >= 3, eps in (0, 1/4).
double c_eps_psi(double k, long long n, double eps, const PsiFunction& psi);

/// Truncation level matched to a trimming count:
/// f_n = F^{<-}(1 - (b_n - V c(b_n, n)) / n). The argument of the quantile
/// must land in (0,1) or the schedule is infeasible at this n.
double threshold_from_trim(long long b_n, long long n, double v, double eps,
                           const PsiFunction& psi, const Observable& observable);

/// Trimming count matched to a truncation level: ceil(n mu(chi > f_n) + r_n).
long long trim_from_threshold(double f_n, long long n, double r_n, const Observable& observable);

struct ConjugateResult {
    double value = 1.0;
    double residual = 0.0; ///< |L(x) * conj(x L(x)) - 1|
    int iterations = 0;
};

using SlowlyVaryingFn = std::function<double(double)>;

/// Numeric de Bruijn conjugate of L at x: the fixed point of y = 1/L(x y),
/// iterated from y = 1 until the relative step drops below 1e-10 (at most
/// 200 iterations, otherwise ConjugateDivergedError).
ConjugateResult debruijn_conjugate(const SlowlyVaryingFn& L, double x);

/// Norming sequence for a regularly varying tail L(x)/x^alpha:
/// alpha/(1-alpha) n^(1/alpha) b^(1-1/alpha) (L^(1/alpha))^#((n/b)^(1/alpha)).
double d_regvar(long long n, long long b_n, double alpha, const SlowlyVaryingFn& L);
/// Same with L identically 1 (conjugate factor 1).
double d_regvar(long long n, long long b_n, double alpha);

/// Norming sequence for the geometric-level law mu(chi = eta^k) = R q^k:
/// eta/(q eta - 1) (R q)^(-log eta/log q) (1-q)^(1+log eta/log q)
///   n^(-log eta/log q) b^(1+log eta/log q).
double d_stpete(long long n, long long b_n, double q, double eta, double r_constant);

/// Trimming schedules b_n. The St. Petersburg kind realizes
/// b_n = ceil(R/(1-q) q^(k_n) n + w_n) with
///   k_n = ceil(log(n^(1-beta) R/(1-q)) / log(1/q))   (clamped to >= 1)
///   w_n = (q^(k_n) n)^0.55 * log psi(floor(log n))^0.45,
/// which keeps n q^(k_n) within a factor 1/q of n^beta and w_n above the
/// (q^(k_n) n)^(1/2+eps) log psi^(1/2-eps) floor at eps = 0.05.
class TrimSchedule {
public:
    enum class Kind { Power, StPetersburg, Explicit };

    static TrimSchedule power(double beta);
    static TrimSchedule st_petersburg(double q, double r_constant, double beta, PsiFunction psi);
    static TrimSchedule explicit_list(std::vector<long long> ns, std::vector<long long> bs);

    long long b(long long n) const;
    /// Level index k_n (St. Petersburg kind only).
    int level_index(long long n) const;

    Kind kind() const { return kind_; }
    double beta() const { return beta_; }
    double q() const { return q_; }
    double r_constant() const { return r_; }

private:
    TrimSchedule() = default;
    Kind kind_ = Kind::Power;
    double beta_ = 0.0;
    double q_ = 0.0;
    double r_ = 0.0;
    std::vector<PsiFunction> psi_; // 0 or 1 element
    std::vector<long long> explicit_n_, explicit_b_;
};

struct ScheduleDiagnosticRow {
    long long n = 0;
    double ratio = 0.0; ///< b_n / log psi(floor(log n))
};

struct ScheduleDiagnostic {
    std::vector<ScheduleDiagnosticRow> rows;
    bool warning = false; ///< trend not strictly increasing on the grid
};

/// Finite-grid trend check of b_n / log psi(floor(log n)) -> infinity.
ScheduleDiagnostic schedule_diagnostic(const TrimSchedule& schedule, const PsiFunction& psi,
                                       std::span<const long long> n_grid);

} // namespace trimshift
