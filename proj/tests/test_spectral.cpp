#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "trimshift/rng.hpp"
#include "trimshift/spectral.hpp"

using namespace trimshift;

namespace {

MarkovMeasure bernoulli_half() {
    return MarkovMeasure(ShiftSystem(2, std::vector<int>{1, 1, 1, 1}, 0.5),
                         {0.5, 0.5, 0.5, 0.5});
}
MarkovMeasure skew91() {
    return MarkovMeasure(ShiftSystem(2, std::vector<int>{1, 1, 1, 1}, 0.5),
                         {0.9, 0.1, 0.5, 0.5});
}
MarkovMeasure golden_measure() {
    return MarkovMeasure(ShiftSystem(2, std::vector<int>{1, 1, 1, 0}, 0.5),
                         {2.0 / 3.0, 1.0 / 3.0, 1.0, 0.0});
}
MarkovMeasure circulant3() {
    return MarkovMeasure(ShiftSystem(3, std::vector<int>{1, 1, 1, 1, 1, 1, 1, 1, 1}, 0.5),
                         {0.1, 0.8, 0.1, 0.1, 0.1, 0.8, 0.8, 0.1, 0.1});
}

// dense eigensolve oracle for |lambda_2| (dimensions <= 64)
double dense_second_modulus(const TransferMatrix& t) {
    const auto dim = static_cast<Eigen::Index>(t.dim());
    REQUIRE(dim <= 64);
    Eigen::MatrixXd m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j)
            m(i, j) = t.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    std::vector<double> moduli;
    for (Eigen::Index i = 0; i < dim; ++i) moduli.push_back(std::abs(solver.eigenvalues()[i]));
    std::sort(moduli.begin(), moduli.end(), std::greater<>{});
    return dim > 1 ? moduli[1] : 0.0;
}

std::shared_ptr<const WordIndex> index_of(const MarkovMeasure& mu, int depth) {
    return std::make_shared<const WordIndex>(mu.system(), depth);
}

// brute-force grid evaluation of the seminorm: max over explicit eps values
// of the integral of osc over balls, each computed from the step-function
// activation rule directly
double seminorm_grid_oracle(const CylinderFunction& h, double eps0, const MarkovMeasure& mu,
                            int grid_points) {
    struct Triple {
        double mu_w, mu_p, osc;
    };
    std::vector<Triple> triples;
    for (int d = 0; d < h.depth(); ++d)
        for (const auto& w : enumerate_words(mu.system(), d)) {
            const double osc = oscillation(h, w);
            if (osc <= 0.0) continue;
            const double mu_w = mu.cylinder_measure(w);
            const double mu_p =
                d == 0 ? 2.0
                       : mu.cylinder_measure(std::span<const Symbol>(w.data(), w.size() - 1));
            triples.push_back({mu_w, mu_p, osc});
        }

    std::vector<double> grid;
    for (int i = 1; i <= grid_points; ++i)
        grid.push_back(eps0 * static_cast<double>(i) / grid_points);
    // ... plus the breakpoints nudged just above their values, where the sup
    // is approached
    for (const auto& t : triples) {
        const double up = t.mu_w * (1.0 + 0x1.0p-40);
        if (up <= eps0) grid.push_back(up);
    }

    double best = 0.0;
    for (double eps : grid) {
        double integral = 0.0;
        for (const auto& t : triples)
            if (t.mu_w < eps && eps <= t.mu_p) integral += t.mu_w * t.osc;
        best = std::max(best, integral / eps);
    }
    return best;
}

// fully independent per-point oracle: resolves the ball of every depth-m
// cylinder via d2_ball_depth and integrates the oscillation
double seminorm_ball_oracle(const CylinderFunction& h, double eps0, const MarkovMeasure& mu,
                            const std::vector<double>& eps_grid) {
    const auto words = enumerate_words(mu.system(), h.depth());
    const CylinderMeasureFn fn = [&](std::span<const Symbol> w) {
        return mu.cylinder_measure(w);
    };
    double best = 0.0;
    for (double eps : eps_grid) {
        if (!(eps > 0.0) || eps > eps0) continue;
        double integral = 0.0;
        for (const auto& w : words) {
            try {
                const int depth = d2_ball_depth(w, eps, fn);
                const double osc = oscillation(
                    h, std::span<const Symbol>(w.data(), static_cast<std::size_t>(depth)));
                integral += mu.cylinder_measure(w) * osc;
            } catch (const InsufficientPrefixError&) {
                // ball deeper than the function's resolution: oscillation 0
            }
        }
        best = std::max(best, integral / eps);
    }
    return best;
}

} // namespace

TEST_CASE("transfer assembly") {
    const auto fair = bernoulli_half();
    const auto t1 = assemble_transfer(fair, 1);
    REQUIRE(t1.dim() == 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(t1.at(i, j) == doctest::Approx(0.5));

    // rows sum to one (the operator fixes constants) at several depths
    for (const auto& mu : {bernoulli_half(), skew91(), golden_measure()}) {
        for (int depth = 1; depth <= 6; ++depth) {
            const auto t = assemble_transfer(mu, depth);
            for (std::size_t u = 0; u < t.dim(); ++u) {
                double row = 0.0;
                for (std::size_t v = 0; v < t.dim(); ++v) row += t.at(u, v);
                CHECK(std::abs(row - 1.0) <= 1e-12);
            }
        }
    }
    CHECK_THROWS_AS(assemble_transfer(fair, 0), ResourceError);
    CHECK_THROWS_AS(assemble_transfer(fair, 13), ResourceError);
}

TEST_CASE("depth-2 action is consistent with depth-1 on embedded functions") {
    const auto mu = skew91();
    const auto t1 = assemble_transfer(mu, 1);
    const auto t2 = assemble_transfer(mu, 2);
    REQUIRE(t2.dim() == 4);

    // h depends on the first symbol only
    const CylinderFunction h1(t1.index, {0.3, 1.7});
    const auto h2 = CylinderFunction::from_function(
        t2.index, [&](std::span<const Symbol> w) { return w[0] == 0 ? 0.3 : 1.7; });

    const auto lh1 = apply_transfer(t1, h1);
    const auto lh2 = apply_transfer(t2, h2);
    for (std::size_t i = 0; i < t2.dim(); ++i) {
        const Symbol first = t2.index->word(i)[0];
        CHECK(lh2.value(i) == doctest::Approx(lh1.value(first)).epsilon(1e-12));
    }
}

TEST_CASE("integral invariance under the transfer operator") {
    const auto mu = skew91();
    Xoshiro256pp rng(3);
    for (int depth = 1; depth <= 5; ++depth) {
        const auto t = assemble_transfer(mu, depth);
        std::vector<double> values(t.dim());
        for (auto& v : values) v = rng.next_unit() * 3.0 - 1.0;
        const CylinderFunction h(t.index, values);
        const auto lh = apply_transfer(t, h);
        double before = 0.0, after = 0.0;
        for (std::size_t i = 0; i < t.dim(); ++i) {
            const double mass = mu.cylinder_measure(t.index->word(i));
            before += mass * h.value(i);
            after += mass * lh.value(i);
        }
        CHECK(std::abs(after - before) <= 1e-12 * std::max(1.0, std::abs(before)));
    }
}

TEST_CASE("leading eigenpair") {
    const auto fair = bernoulli_half();
    const auto lead_fair = leading_eigenpair(assemble_transfer(fair, 1));
    CHECK(std::abs(lead_fair.lambda - 1.0) <= 1e-10);
    CHECK(lead_fair.eigvec[0] == doctest::Approx(0.5).epsilon(1e-10));

    const auto mu = skew91();
    const auto lead = leading_eigenpair(assemble_transfer(mu, 1));
    CHECK(std::abs(lead.lambda - 1.0) <= 1e-10);
    CHECK(lead.eigvec[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-10));
    CHECK(lead.eigvec[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-10));

    // at depth m the left eigenvector is the vector of cylinder masses
    for (int depth : {2, 3, 4}) {
        const auto t = assemble_transfer(mu, depth);
        const auto pair = leading_eigenpair(t);
        CHECK(std::abs(pair.lambda - 1.0) <= 1e-10);
        for (std::size_t i = 0; i < t.dim(); ++i) {
            CHECK(pair.eigvec[i] ==
                  doctest::Approx(mu.cylinder_measure(t.index->word(i))).epsilon(1e-9));
            CHECK(pair.eigvec[i] > 0.0);
        }
    }
}

TEST_CASE("spectral gap") {
    const auto fair = bernoulli_half();
    CHECK(spectral_gap(assemble_transfer(fair, 1)) <= 1e-10);

    const auto mu = skew91();
    // 2x2 eigenvalues are {1, trace - 1} = {1, 0.4}
    CHECK(std::abs(spectral_gap(assemble_transfer(mu, 1)) - 0.4) <= 1e-8);

    // refinement stability for the Markov potential
    const double g1 = spectral_gap(assemble_transfer(mu, 1));
    const double g2 = spectral_gap(assemble_transfer(mu, 2));
    const double g3 = spectral_gap(assemble_transfer(mu, 3));
    CHECK(std::abs(g1 - g2) <= 1e-8);
    CHECK(std::abs(g1 - g3) <= 1e-8);

    // dense-oracle agreement across measures and depths (dims <= 64)
    for (const auto& m : {skew91(), golden_measure()}) {
        for (int depth = 1; depth <= 5; ++depth) {
            const auto t = assemble_transfer(m, depth);
            if (t.dim() > 64) continue;
            CHECK(std::abs(spectral_gap(t) - dense_second_modulus(t)) <= 1e-8);
        }
    }

    // complex second pair: circulant rows give |lambda_2| = 0.7 exactly
    const auto circ = circulant3();
    const auto tc = assemble_transfer(circ, 1);
    CHECK(std::abs(spectral_gap(tc) - 0.7) <= 1e-8);
    CHECK(std::abs(spectral_gap(tc) - dense_second_modulus(tc)) <= 1e-8);

    // nearly periodic stochastic matrix: gap violation
    const MarkovMeasure flip(ShiftSystem(2, std::vector<int>{1, 1, 1, 1}, 0.5),
                             {1e-12, 1.0 - 1e-12, 1.0 - 1e-12, 1e-12});
    CHECK_THROWS_AS(spectral_gap(assemble_transfer(flip, 1)), GapViolationError);
}

TEST_CASE("oscillation") {
    const auto mu = bernoulli_half();
    const auto idx2 = index_of(mu, 2);
    const CylinderFunction constant(idx2, {3.0, 3.0, 3.0, 3.0});
    CHECK(oscillation(constant, std::vector<Symbol>{}) == 0.0);

    const auto idx1 = index_of(mu, 1);
    const CylinderFunction ind(idx1, {1.0, 0.0}); // indicator of [a1]
    CHECK(oscillation(ind, std::vector<Symbol>{}) == 1.0);
    CHECK(oscillation(ind, std::vector<Symbol>{0}) == 0.0);

    const auto gm = golden_measure();
    const auto gidx = index_of(gm, 2);
    std::vector<double> vals(gidx->size(), 1.0);
    vals[0] = 0.0;
    const CylinderFunction g(gidx, vals);
    CHECK(oscillation(g, std::vector<Symbol>{1, 1}) == 0.0); // empty cylinder
}

TEST_CASE("quasi-Hoelder seminorm on hand-computed cases") {
    const auto mu = bernoulli_half();

    const auto idx1 = index_of(mu, 1);
    const CylinderFunction constant(idx1, {2.0, 2.0});
    CHECK(quasi_holder_seminorm(constant, 0.9, mu) == 0.0);

    // depth-1 indicator: every ball below eps0 < 1 is inside a 1-cylinder
    const CylinderFunction ind1(idx1, {1.0, 0.0});
    CHECK(quasi_holder_seminorm(ind1, 0.9, mu) == 0.0);

    // depth-2 indicator of [a1 a1]: only the [a1] ball carries oscillation,
    // active for eps in (1/2, 1], so the sup is (1/2 * 1)/(1/2) = 1 at eps0 = 0.9
    const auto idx2 = index_of(mu, 2);
    const CylinderFunction ind11(idx2, {1.0, 0.0, 0.0, 0.0});
    CHECK(quasi_holder_seminorm(ind11, 0.9, mu) == doctest::Approx(1.0).epsilon(1e-12));
    // with eps0 = 0.4 < 1/2 no ball of depth < 2 activates
    CHECK(quasi_holder_seminorm(ind11, 0.4, mu) == 0.0);

    CHECK_THROWS_AS(quasi_holder_seminorm(ind11, 1.0, mu), DomainError);
    CHECK_THROWS_AS(quasi_holder_seminorm(ind11, 0.0, mu), DomainError);
}

TEST_CASE("seminorm agrees with grid and ball oracles") {
    const auto mu = bernoulli_half();
    const auto gm = golden_measure();

    Xoshiro256pp rng(17);
    for (const auto& m : {mu, gm}) {
        for (int depth : {1, 2, 3, 4}) {
            const auto idx = index_of(m, depth);
            std::vector<double> values(idx->size());
            for (auto& v : values) v = rng.next_unit() * 2.0 - 0.5;
            const CylinderFunction h(idx, values);
            const double exact = quasi_holder_seminorm(h, 0.9, m);
            const double grid = seminorm_grid_oracle(h, 0.9, m, 10000);
            CHECK(std::abs(exact - grid) <= 1e-9 * std::max(1.0, exact));

            std::vector<double> eps_grid;
            for (int i = 1; i <= 500; ++i) eps_grid.push_back(0.9 * i / 500.0);
            for (int d = 0; d < depth; ++d)
                for (const auto& w : enumerate_words(m.system(), d))
                    eps_grid.push_back(m.cylinder_measure(w) * (1.0 + 0x1.0p-40));
            const double ball = seminorm_ball_oracle(h, 0.9, m, eps_grid);
            CHECK(std::abs(exact - ball) <= 1e-9 * std::max(1.0, exact));
        }
    }
}

TEST_CASE("seminorm triangle and product inequalities") {
    const auto mu = skew91();
    Xoshiro256pp rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const int depth = 1 + static_cast<int>(rng.next() % 6);
        const auto idx = index_of(mu, depth);
        std::vector<double> fa(idx->size()), ga(idx->size());
        for (auto& v : fa) v = rng.next_unit() * 4.0 - 2.0;
        for (auto& v : ga) v = rng.next_unit() * 4.0 - 2.0;
        const CylinderFunction f(idx, fa), g(idx, ga);

        std::vector<double> sum(idx->size()), prod(idx->size());
        double f_inf = 0.0, g_inf = 0.0;
        for (std::size_t i = 0; i < idx->size(); ++i) {
            sum[i] = fa[i] + ga[i];
            prod[i] = fa[i] * ga[i];
            f_inf = std::max(f_inf, std::abs(fa[i]));
            g_inf = std::max(g_inf, std::abs(ga[i]));
        }
        const double nf = quasi_holder_seminorm(f, 0.9, mu);
        const double ng = quasi_holder_seminorm(g, 0.9, mu);
        const double nsum = quasi_holder_seminorm(CylinderFunction(idx, sum), 0.9, mu);
        const double nprod = quasi_holder_seminorm(CylinderFunction(idx, prod), 0.9, mu);
        CHECK(nsum <= nf + ng + 1e-12 * std::max(1.0, nf + ng));
        const double bound = f_inf * ng + nf * g_inf;
        CHECK(nprod <= bound + 1e-12 * std::max(1.0, bound));
    }
}

TEST_CASE("exceedance indicators have unit seminorm on the canonical example") {
    const auto mu = bernoulli_half();
    const ReturnTimeObservable chi(mu, 0, 4.0);
    for (int k = 2; k <= 10; ++k) {
        const auto ind = exceedance_indicator(chi, mu, chi.level_value(k));
        const double norm = quasi_holder_seminorm(ind, 0.9, mu);
        CHECK(norm <= 1.0 + 1e-9);
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    }
    // k = 1 gives a depth-1 indicator: every ball below eps0 < 1 sits inside
    // a 1-cylinder, so the seminorm vanishes
    const auto ind1 = exceedance_indicator(chi, mu, chi.level_value(1));
    CHECK(quasi_holder_seminorm(ind1, 0.9, mu) == 0.0);
    // k = 0: the indicator is constant one
    const auto ind0 = exceedance_indicator(chi, mu, 1.0);
    CHECK(quasi_holder_seminorm(ind0, 0.9, mu) == 0.0);
}

TEST_CASE("property audit on the canonical example") {
    const auto mu = bernoulli_half();
    const ReturnTimeObservable chi(mu, 0, 4.0);
    std::vector<double> levels;
    for (int k = 0; k <= 8; ++k) levels.push_back(chi.level_value(k));

    const auto audit = property_f_audit(chi, mu, 0.9, levels);
    CHECK(audit.k1_hat == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(audit.k2_hat <= 1.0 + 1e-9);
    CHECK(audit.k3_hat <= 2.0 * audit.k2_hat + 1e-9);
    CHECK(std::isfinite(audit.k1_hat));
    CHECK(std::isfinite(audit.k3_hat));
    REQUIRE(audit.rows.size() == levels.size());
    // level below the smallest value: truncation is identically zero
    const auto audit_small = property_f_audit(chi, mu, 0.9, std::vector<double>{0.5});
    CHECK(audit_small.k1_hat == 0.0);
    CHECK(audit_small.k3_hat == 0.0);

    // the pareto observable is not cylinder-measurable at finite depth
    const ParetoObservable pareto(0.5);
    CHECK_THROWS_AS(
        property_f_audit(static_cast<const Observable&>(pareto), mu, 0.9, levels),
        UnsupportedObservableError);
}

TEST_CASE("truncated level functions match the observable on sample words") {
    const auto mu = bernoulli_half();
    const ReturnTimeObservable chi(mu, 0, 4.0);
    const double level = chi.level_value(3);
    const auto trunc = truncated_level_function(chi, mu, level);
    REQUIRE(trunc.depth() == 4);
    for (std::size_t i = 0; i < trunc.size(); ++i) {
        const auto w = trunc.index().word(i);
        // evaluate chi on the word extended, then truncate
        std::vector<Symbol> ext(w.begin(), w.end());
        ext.resize(100, 1); // any continuation determines chi here
        const double v = chi.eval(ext);
        CHECK(trunc.value(i) == (v <= level ? v : 0.0));
    }

    const auto atom = atom_indicator(chi, mu, level);
    for (std::size_t i = 0; i < atom.size(); ++i) {
        const auto w = atom.index().word(i);
        std::vector<Symbol> ext(w.begin(), w.end());
        ext.resize(100, 1);
        CHECK(atom.value(i) == (chi.eval(ext) == level ? 1.0 : 0.0));
    }
    // off-atom level: the indicator is the zero function
    const auto off = atom_indicator(chi, mu, 5.0);
    CHECK(quasi_holder_seminorm(off, 0.9, mu) == 0.0);
}
