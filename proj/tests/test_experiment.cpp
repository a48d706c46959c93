#include <doctest.h>

#include <cmath>
#include <vector>

#include "trimshift/experiment.hpp"
#include "trimshift/io.hpp"
#include "trimshift/trimming.hpp"

using namespace trimshift;

namespace {

MarkovMeasure bernoulli_half() {
    return MarkovMeasure(ShiftSystem(2, std::vector<int>{1, 1, 1, 1}, 0.5),
                         {0.5, 0.5, 0.5, 0.5});
}

ExperimentSpec canonical_spec(Mode mode, std::vector<long long> checkpoints, int ensemble,
                              std::uint64_t seed) {
    MarkovMeasure mu = bernoulli_half();
    auto chi = std::make_shared<ReturnTimeObservable>(mu, 0, 4.0);
    const auto psi = PsiFunction::power(1.0);
    auto schedule = TrimSchedule::st_petersburg(chi->q(), chi->level_constant(), 0.6, psi);
    return ExperimentSpec{std::move(mu),  chi,  std::move(schedule), psi, mode, 0.1, 0.0, 3.0,
                          std::move(checkpoints), {},  ensemble, seed, std::size_t{1} << 16};
}

ExperimentSpec pareto_spec(std::vector<long long> checkpoints, int ensemble,
                           std::uint64_t seed) {
    MarkovMeasure mu = bernoulli_half();
    auto chi = std::make_shared<ParetoObservable>(0.5);
    const auto psi = PsiFunction::power(1.0);
    return ExperimentSpec{std::move(mu), chi, TrimSchedule::power(0.6), psi, Mode::Trim,
                          0.1, 0.0, 3.0, std::move(checkpoints), {}, ensemble, seed,
                          std::size_t{1} << 16};
}

} // namespace

TEST_CASE("reports are independent of the thread count") {
    auto spec = canonical_spec(Mode::Trim, {1000, 10000}, 6, 42);
    const auto r1 = run_trim(spec, 1);
    const auto r3 = run_trim(spec, 3);
    CHECK(report_to_csv(r1) == report_to_csv(r3));

    auto tspec = canonical_spec(Mode::Truncate, {1000, 10000}, 6, 42);
    CHECK(report_to_csv(run_truncate(tspec, 1)) == report_to_csv(run_truncate(tspec, 4)));

    auto espec = canonical_spec(Mode::Exceedance, {1000, 10000}, 6, 42);
    CHECK(report_to_csv(run_exceedance(espec, 2)) == report_to_csv(run_exceedance(espec, 5)));

    auto pspec = pareto_spec({1000, 5000}, 4, 42);
    CHECK(report_to_csv(run_trim(pspec, 1)) == report_to_csv(run_trim(pspec, 3)));
}

TEST_CASE("degenerate full trim is recorded and excluded") {
    auto spec = pareto_spec({1000}, 1, 7);
    spec.schedule = TrimSchedule::explicit_list({1000}, {1000});
    const auto report = run_trim(spec, 1);
    REQUIRE(report.trim_rows.size() == 1);
    CHECK(report.trim_rows[0].s_trim == 0.0);
    CHECK(report.trim_rows[0].ratio == 0.0);
    CHECK(report.summaries[0].degenerate == 1);
    CHECK(report.summaries[0].paths == 1);
}

TEST_CASE("st petersburg trim run carries the closed-form norming sequence") {
    auto spec = canonical_spec(Mode::Trim, {10000}, 8, 42);
    const auto report = run_trim(spec, 2);
    REQUIRE(report.trim_rows.size() == 8);
    const auto& row = report.trim_rows[0];
    const double direct = 1e8 / (2.0 * static_cast<double>(row.b_n));
    CHECK(row.d_n == doctest::Approx(direct).epsilon(1e-12));
    // finite-n ensemble sits in a loose bracket around the asymptote
    CHECK(report.summaries[0].median > 0.3);
    CHECK(report.summaries[0].median < 1.3);
    for (const auto& r : report.trim_rows) {
        CHECK(std::isfinite(r.ratio));
        CHECK(r.ratio > 0.0);
        CHECK(r.s_trim <= r.s_n);
    }
}

TEST_CASE("truncate mode records exact expectations and the plateau diagnostic") {
    auto spec = canonical_spec(Mode::Truncate, {1000, 10000}, 4, 42);
    const auto report = run_truncate(spec, 2);
    REQUIRE(report.truncate_rows.size() == 8);
    const auto& chi = dynamic_cast<const ReturnTimeObservable&>(*spec.observable);
    for (const auto& row : report.truncate_rows) {
        CHECK(row.expected ==
              doctest::Approx(static_cast<double>(row.n) * chi.expected_truncated(row.f_n))
                  .epsilon(1e-14));
        CHECK(row.t_n >= 0.0);
        CHECK(row.ratio > 0.0);
        // plateau = f^(-log q / log eta) * log psi(floor(log n)) / n, exponent 1/2 here...
        const double expo = -std::log(chi.q()) / std::log(chi.eta());
        const long j = static_cast<long>(std::floor(std::log(static_cast<double>(row.n))));
        const double lg = PsiFunction::power(1.0).log_value(j);
        CHECK(row.plateau ==
              doctest::Approx(std::pow(row.f_n, expo) * lg / static_cast<double>(row.n))
                  .epsilon(1e-12));
    }
}

TEST_CASE("explicit thresholds support degenerate and total truncation") {
    auto spec = canonical_spec(Mode::Truncate, {500, 1000}, 3, 11);
    spec.f_explicit = {0.5, 1e30};
    const auto report = run_truncate(spec, 1);
    REQUIRE(report.truncate_rows.size() == 6);
    for (const auto& row : report.truncate_rows) {
        if (row.n == 500) {
            // below the smallest atom: empty truncation, degenerate ratio
            CHECK(row.t_n == 0.0);
            CHECK(row.expected == 0.0);
            CHECK(row.ratio == 0.0);
        } else {
            CHECK(row.expected > 0.0);
        }
    }
    CHECK(report.summaries[0].degenerate == 3);
    CHECK(report.summaries[1].degenerate == 0);

    // threshold above the running maximum: T_n = S_n exactly
    auto spec2 = canonical_spec(Mode::Trim, {1000}, 1, 11);
    TrajectorySampler sampler(spec2.measure, 11, 0);
    const ReturnTimeObservable& chi = dynamic_cast<const ReturnTimeObservable&>(*spec2.observable);
    TrimAccumulator acc;
    std::vector<Symbol> window(chi.lookahead_window());
    std::vector<Symbol> stream = sample_stream(sampler, 1000 + chi.lookahead_window());
    for (int i = 0; i < 1000; ++i)
        acc.push(chi.eval(std::span<const Symbol>(stream.data() + i, chi.lookahead_window())));
    CHECK(acc.truncated_sum(1e30) == acc.total());
}

TEST_CASE("exceedance counts partition n and match the binomial law") {
    auto spec = canonical_spec(Mode::Exceedance, {10000}, 50, 42);
    spec.f_explicit = {1.0}; // chi > 1 iff the first symbol is special
    const auto report = run_exceedance(spec, 3);
    REQUIRE(report.exceedance_rows.size() == 50);

    int beyond = 0;
    for (const auto& row : report.exceedance_rows) {
        CHECK(row.expect_above == doctest::Approx(5000.0));
        // count_above + count_equal + count_below = n: equal has zero mass at 1? no:
        // chi = 1 exactly when the first symbol differs, so above + equal = n here.
        CHECK(row.count_above + row.count_equal == row.n);
        const double dev = std::abs(static_cast<double>(row.count_above) - 5000.0);
        if (dev > 3.0 * std::sqrt(10000.0 / 4.0) * std::sqrt(2.0)) ++beyond;
    }
    CHECK(beyond <= 1); // < 1% of 50 paths, generously rounded up
}

TEST_CASE("exceedance envelopes use the c function and flag coverage") {
    auto spec = canonical_spec(Mode::Exceedance, {10000}, 20, 42);
    const auto report = run_exceedance(spec, 2);
    const auto& chi = dynamic_cast<const ReturnTimeObservable&>(*spec.observable);
    const auto psi = PsiFunction::power(1.0);
    for (const auto& row : report.exceedance_rows) {
        const double gamma_expect =
            3.0 * c_eps_psi(std::max(1.0, row.expect_above), row.n, 0.1, psi);
        CHECK(row.gamma == doctest::Approx(gamma_expect).epsilon(1e-12));
        CHECK(row.within_above ==
              (std::abs(static_cast<double>(row.count_above) - row.expect_above) <= row.gamma));
    }
    // the summary exposes coverage fractions
    CHECK(report.summaries[0].within_above_frac >= 0.9);
    CHECK(report.summaries[0].within_equal_frac >= 0.9);
}

TEST_CASE("lookahead caps abort with path and position context") {
    MarkovMeasure mu = bernoulli_half();
    auto chi = std::make_shared<ReturnTimeObservable>(mu, 0, 4.0, 3); // depth cap 3
    const auto psi = PsiFunction::power(1.0);
    ExperimentSpec spec{std::move(mu), chi,
                        TrimSchedule::st_petersburg(chi->q(), chi->level_constant(), 0.6, psi),
                        psi, Mode::Trim, 0.1, 0.0, 3.0, {1000}, {}, 2, 42,
                        std::size_t{1} << 16};
    try {
        run_trim(spec, 1);
        FAIL("expected CapExceededError");
    } catch (const CapExceededError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("path") != std::string::npos);
        CHECK(msg.find("position") != std::string::npos);
    }
}

TEST_CASE("spec validation rejects unusable configurations") {
    auto spec = canonical_spec(Mode::Trim, {1000}, 1, 1);
    spec.ensemble = 0;
    CHECK_THROWS_AS(run_experiment(spec, 1), DomainError);

    auto spec2 = canonical_spec(Mode::Trim, {1000, 1000}, 1, 1);
    CHECK_THROWS_AS(run_experiment(spec2, 1), DomainError);

    // trim mode with the return-time observable needs the stpete schedule
    auto spec3 = canonical_spec(Mode::Trim, {1000}, 1, 1);
    spec3.schedule = TrimSchedule::power(0.6);
    CHECK_THROWS_AS(run_experiment(spec3, 1), DomainError);

    // f_explicit in trim mode is rejected
    auto spec4 = canonical_spec(Mode::Trim, {1000}, 1, 1);
    spec4.f_explicit = {4.0};
    CHECK_THROWS_AS(run_experiment(spec4, 1), DomainError);
}

TEST_CASE("summary statistics") {
    ExperimentReport synthetic;
    synthetic.mode = Mode::Trim;
    int path = 0;
    for (double ratio : {0.9, 1.0, 1.1}) {
        TrimRow row;
        row.n = 100;
        row.path = path++;
        row.ratio = ratio;
        synthetic.trim_rows.push_back(row);
    }
    const auto s = summarize(synthetic);
    REQUIRE(s.size() == 1);
    CHECK(s[0].median == doctest::Approx(1.0));
    CHECK(s[0].median_abs_dev == doctest::Approx(0.1));
    CHECK(s[0].max_abs_dev == doctest::Approx(0.1));
    CHECK(s[0].mean == doctest::Approx(1.0));

    // permutation invariance
    std::swap(synthetic.trim_rows[0], synthetic.trim_rows[2]);
    const auto s2 = summarize(synthetic);
    CHECK(s2[0].median == s[0].median);
    CHECK(s2[0].q25 == s[0].q25);
    CHECK(s2[0].q75 == s[0].q75);

    // single path: the summary is that path
    ExperimentReport single;
    single.mode = Mode::Trim;
    TrimRow row;
    row.n = 10;
    row.path = 0;
    row.ratio = 0.8;
    single.trim_rows.push_back(row);
    const auto s3 = summarize(single);
    CHECK(s3[0].median == doctest::Approx(0.8));
    CHECK(s3[0].mean == doctest::Approx(0.8));

    ExperimentReport empty;
    CHECK_THROWS_AS(summarize(empty), DomainError);
}

TEST_CASE("sandwich holds at every recorded checkpoint") {
    auto spec = canonical_spec(Mode::Exceedance, {1000, 5000}, 10, 9);
    // run_exceedance checks the sandwich internally and would throw
    CHECK_NOTHROW(run_exceedance(spec, 2));
    auto tspec = canonical_spec(Mode::Truncate, {1000, 5000}, 10, 9);
    CHECK_NOTHROW(run_truncate(tspec, 2));
}
