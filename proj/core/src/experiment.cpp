#include "trimshift/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "trimshift/errors.hpp"
#include "trimshift/trimming.hpp"

namespace trimshift {

const char* mode_name(Mode mode) {
    switch (mode) {
        case Mode::Trim: return "trim";
        case Mode::Truncate: return "truncate";
        case Mode::Exceedance: return "exceedance";
    }
    return "?";
}

namespace {

constexpr long long kMaxCheckpoint = 100000000; // 1e8
constexpr int kMaxEnsemble = 10000;

struct CheckpointPlan {
    long long n = 0;
    long long b_n = 0;
    double d_n = 0.0;
    double f_n = 0.0;
    double expected = 0.0;
    double plateau = 0.0;
    double expect_above = 0.0;
    double expect_equal = 0.0;
    double gamma = 0.0;
    double gamma_prime = 0.0;
};

double envelope(const ExperimentSpec& spec, double expected_count, long long n) {
    // c is defined for first argument >= 1; tiny expected counts are clamped
    // to the boundary, where the max() inside c takes over anyway.
    return spec.v_hat * c_eps_psi(std::max(1.0, expected_count), n, spec.eps, spec.psi);
}

/// mu(chi = f) for the configured observable (0 off atoms / for continuous).
double atom_mass(const Observable& obs, double f) {
    const auto* rt = dynamic_cast<const ReturnTimeObservable*>(&obs);
    if (rt == nullptr) return 0.0;
    if (f < 1.0) return 0.0;
    const int k = rt->floor_level_index(f);
    return rt->level_value(k) == f ? rt->level_prob(k) : 0.0;
}

std::vector<CheckpointPlan> plan_checkpoints(const ExperimentSpec& spec) {
    const Observable& obs = *spec.observable;
    const auto* rt = dynamic_cast<const ReturnTimeObservable*>(&obs);

    std::vector<CheckpointPlan> plans;
    plans.reserve(spec.checkpoints.size());
    for (std::size_t ci = 0; ci < spec.checkpoints.size(); ++ci) {
        const long long n = spec.checkpoints[ci];
        CheckpointPlan plan;
        plan.n = n;

        if (spec.mode == Mode::Trim) {
            plan.b_n = spec.schedule.b(n);
            if (plan.b_n < 1 || plan.b_n > n)
                throw ScheduleInfeasibleError("trim schedule: b_n = " + std::to_string(plan.b_n) +
                                              " outside [1, n] at n = " + std::to_string(n));
            if (plan.b_n == n) {
                plan.d_n = 0.0; // degenerate schedule; the row is flagged, not normed
            } else if (spec.schedule.kind() == TrimSchedule::Kind::StPetersburg) {
                plan.d_n = d_stpete(n, plan.b_n, rt->q(), rt->eta(), rt->level_constant());
            } else {
                const auto* pareto = dynamic_cast<const ParetoObservable*>(&obs);
                plan.d_n = d_regvar(n, plan.b_n, pareto->alpha());
            }
        } else {
            if (!spec.f_explicit.empty()) {
                plan.f_n = spec.f_explicit[ci];
            } else if (spec.schedule.kind() == TrimSchedule::Kind::StPetersburg) {
                plan.f_n = rt->level_value(spec.schedule.level_index(n));
            } else {
                plan.f_n = threshold_from_trim(spec.schedule.b(n), n, spec.v, spec.eps, spec.psi,
                                               obs);
            }
            plan.expected = static_cast<double>(n) * obs.expected_truncated(plan.f_n);
            if (rt != nullptr && plan.f_n >= 1.0) {
                const double expo = -std::log(rt->q()) / std::log(rt->eta());
                const long j = static_cast<long>(std::floor(std::log(static_cast<double>(n))));
                const double lg = j >= 1 ? spec.psi.log_value(j) : 0.0;
                plan.plateau = std::pow(plan.f_n, expo) * lg / static_cast<double>(n);
            }
            plan.expect_above = static_cast<double>(n) * obs.tail_prob(plan.f_n);
            plan.expect_equal = static_cast<double>(n) * atom_mass(obs, plan.f_n);
            plan.gamma = envelope(spec, plan.expect_above, n);
            plan.gamma_prime = envelope(spec, plan.expect_equal, n);
        }
        plans.push_back(plan);
    }
    return plans;
}

struct PathResult {
    std::vector<TrimRow> trim;
    std::vector<TruncateRow> truncate;
    std::vector<ExceedanceRow> exceedance;
};

void check_sandwich(const TrimAccumulator& acc, double f, double t_n, long long n, int path) {
    const std::size_t above = acc.count_above(f);
    const std::size_t equal = acc.count_equal(f);
    const double s_m = acc.trimmed_sum(above);
    const double s_me = acc.trimmed_sum(above + equal);
    // trimmed sums cancel against the full total; scale the slack with it
    const double tol = 1e-9 * std::max(1.0, acc.total());
    if (!(s_m >= t_n - tol && t_n >= s_me - tol))
        throw Error("truncation/trimming sandwich violated at n = " + std::to_string(n) +
                    ", path " + std::to_string(path));
}

PathResult simulate_path(const ExperimentSpec& spec, const std::vector<CheckpointPlan>& plans,
                         int path) {
    const Observable& obs = *spec.observable;
    const long long n_max = plans.back().n;

    TrajectorySampler sampler(spec.measure, spec.master_seed,
                              static_cast<std::uint64_t>(path));
    TrimAccumulator acc(spec.topk_capacity);

    PathResult result;
    std::size_t next_plan = 0;

    const auto at_checkpoint = [&](const CheckpointPlan& plan) {
        const long long n = plan.n;
        switch (spec.mode) {
            case Mode::Trim: {
                TrimRow row;
                row.n = n;
                row.path = path;
                row.s_n = acc.total();
                row.b_n = plan.b_n;
                row.s_trim = acc.trimmed_sum(static_cast<std::size_t>(plan.b_n));
                row.d_n = plan.d_n;
                row.ratio = plan.d_n > 0.0 ? row.s_trim / plan.d_n : 0.0;
                result.trim.push_back(row);
                break;
            }
            case Mode::Truncate: {
                TruncateRow row;
                row.n = n;
                row.path = path;
                row.f_n = plan.f_n;
                row.t_n = acc.truncated_sum(plan.f_n);
                row.expected = plan.expected;
                row.ratio = plan.expected > 0.0 ? row.t_n / plan.expected : 0.0;
                row.plateau = plan.plateau;
                check_sandwich(acc, plan.f_n, row.t_n, n, path);
                result.truncate.push_back(row);
                break;
            }
            case Mode::Exceedance: {
                ExceedanceRow row;
                row.n = n;
                row.path = path;
                row.count_above = static_cast<long long>(acc.count_above(plan.f_n));
                row.count_equal = static_cast<long long>(acc.count_equal(plan.f_n));
                row.expect_above = plan.expect_above;
                row.expect_equal = plan.expect_equal;
                row.gamma = plan.gamma;
                row.gamma_prime = plan.gamma_prime;
                row.within_above =
                    std::abs(static_cast<double>(row.count_above) - row.expect_above) <= row.gamma;
                row.within_equal = std::abs(static_cast<double>(row.count_equal) -
                                            row.expect_equal) <= row.gamma_prime;
                check_sandwich(acc, plan.f_n, acc.truncated_sum(plan.f_n), n, path);
                result.exceedance.push_back(row);
                break;
            }
        }
    };

    // Stream once with a doubled ring buffer giving each position a
    // contiguous lookahead window. The Pareto family gets a packed-bit fast
    // path; values are identical to eval() on the same window.
    const auto* pareto = dynamic_cast<const ParetoObservable*>(&obs);
    const std::size_t window = obs.lookahead_window();

    try {
        if (pareto != nullptr) {
            std::uint64_t hi = 0, lo = 0;
            for (int j = 0; j < 128; ++j) {
                const std::uint64_t bit = sampler.next() & 1;
                hi = (hi << 1) | (lo >> 63);
                lo = (lo << 1) | bit;
            }
            for (long long i = 0; i < n_max; ++i) {
                acc.push(pareto->value_from_bits(hi, lo));
                while (next_plan < plans.size() &&
                       static_cast<long long>(acc.count()) == plans[next_plan].n) {
                    at_checkpoint(plans[next_plan]);
                    ++next_plan;
                }
                const std::uint64_t bit = sampler.next() & 1;
                hi = (hi << 1) | (lo >> 63);
                lo = (lo << 1) | bit;
            }
        } else {
            std::vector<Symbol> ring(2 * window);
            for (std::size_t j = 0; j < window; ++j) {
                const Symbol s = sampler.next();
                ring[j] = ring[j + window] = s;
            }
            for (long long i = 0; i < n_max; ++i) {
                const std::size_t base = static_cast<std::size_t>(i % static_cast<long long>(window));
                acc.push(obs.eval(std::span<const Symbol>(ring.data() + base, window)));
                while (next_plan < plans.size() &&
                       static_cast<long long>(acc.count()) == plans[next_plan].n) {
                    at_checkpoint(plans[next_plan]);
                    ++next_plan;
                }
                const Symbol s = sampler.next();
                ring[base] = ring[base + window] = s;
            }
        }
    } catch (const CapExceededError& e) {
        throw CapExceededError("path " + std::to_string(path) + ", position " +
                               std::to_string(acc.count()) + ": " + e.what());
    }
    return result;
}

void validate_spec(const ExperimentSpec& spec) {
    if (!spec.observable) throw DomainError("experiment: observable is not set");
    if (spec.ensemble < 1 || spec.ensemble > kMaxEnsemble)
        throw DomainError("experiment: ensemble size must lie in [1, " +
                          std::to_string(kMaxEnsemble) + "]");
    if (spec.checkpoints.empty()) throw DomainError("experiment: no checkpoints given");
    long long prev = 0;
    for (long long n : spec.checkpoints) {
        if (n <= prev) throw DomainError("experiment: checkpoints must be strictly increasing");
        if (n > kMaxCheckpoint)
            throw DomainError("experiment: checkpoints are capped at " +
                              std::to_string(kMaxCheckpoint));
        prev = n;
    }
    if (!spec.f_explicit.empty()) {
        if (spec.mode == Mode::Trim)
            throw DomainError("experiment: explicit thresholds apply only to the truncate and "
                              "exceedance modes");
        if (spec.f_explicit.size() != spec.checkpoints.size())
            throw DomainError("experiment: f_explicit must match the checkpoint list");
    }

    const auto* rt = dynamic_cast<const ReturnTimeObservable*>(spec.observable.get());
    const auto* pareto = dynamic_cast<const ParetoObservable*>(spec.observable.get());
    if (spec.mode == Mode::Trim) {
        if (spec.schedule.kind() == TrimSchedule::Kind::StPetersburg) {
            if (rt == nullptr)
                throw DomainError("experiment: the St. Petersburg schedule requires the "
                                  "return-time observable");
        } else if (pareto == nullptr) {
            throw DomainError("experiment: no norming sequence is available for this "
                              "schedule/observable pairing (need the St. Petersburg schedule for "
                              "the return-time observable, or the Pareto observable)");
        }
        // b_n must be nondecreasing over the evaluated range.
        long long prev_b = 0;
        for (long long n : spec.checkpoints) {
            const long long b = spec.schedule.b(n);
            if (b < prev_b)
                throw ScheduleInfeasibleError(
                    "experiment: trim schedule decreases across checkpoints (b(" +
                    std::to_string(n) + ") = " + std::to_string(b) + ")");
            prev_b = b;
        }
    } else if (spec.f_explicit.empty() &&
               spec.schedule.kind() != TrimSchedule::Kind::StPetersburg && rt == nullptr &&
               pareto == nullptr) {
        throw DomainError("experiment: unsupported observable");
    }
}

} // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec, int threads) {
    validate_spec(spec);
    const auto plans = plan_checkpoints(spec);
    const int paths = spec.ensemble;

    std::vector<PathResult> results(static_cast<std::size_t>(paths));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(paths));

    const int worker_count = std::max(1, threads);
    std::atomic<int> cursor{0};
    const auto worker = [&]() {
        for (;;) {
            const int p = cursor.fetch_add(1);
            if (p >= paths) return;
            try {
                results[static_cast<std::size_t>(p)] = simulate_path(spec, plans, p);
            } catch (...) {
                errors[static_cast<std::size_t>(p)] = std::current_exception();
            }
        }
    };
    if (worker_count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(worker_count));
        for (int t = 0; t < worker_count; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);

    ExperimentReport report;
    report.mode = spec.mode;
    report.master_seed = spec.master_seed;
    for (std::size_t ci = 0; ci < plans.size(); ++ci) {
        for (int p = 0; p < paths; ++p) {
            const auto& r = results[static_cast<std::size_t>(p)];
            switch (spec.mode) {
                case Mode::Trim: report.trim_rows.push_back(r.trim[ci]); break;
                case Mode::Truncate: report.truncate_rows.push_back(r.truncate[ci]); break;
                case Mode::Exceedance: report.exceedance_rows.push_back(r.exceedance[ci]); break;
            }
        }
    }
    report.summaries = summarize(report);
    bool nonincreasing = true;
    for (std::size_t i = 0; i + 1 < report.summaries.size(); ++i)
        if (report.summaries[i + 1].median_abs_dev > report.summaries[i].median_abs_dev)
            nonincreasing = false;
    report.median_dev_nonincreasing = nonincreasing;
    if (spec.mode == Mode::Trim)
        report.schedule_warning =
            schedule_diagnostic(spec.schedule, spec.psi, spec.checkpoints).warning;
    return report;
}

namespace {

ExperimentReport run_mode(const ExperimentSpec& spec, Mode mode, int threads) {
    if (spec.mode != mode)
        throw DomainError(std::string("run_") + mode_name(mode) + ": spec mode is " +
                          mode_name(spec.mode));
    return run_experiment(spec, threads);
}

double quantile_type7(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted[0];
    const double h = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double w = h - static_cast<double>(lo);
    return sorted[lo] * (1.0 - w) + sorted[hi] * w;
}

double median_of(const std::vector<double>& sorted) {
    const std::size_t m = sorted.size();
    if (m == 0) return 0.0;
    return (m % 2 == 1) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
}

} // namespace

ExperimentReport run_trim(const ExperimentSpec& spec, int threads) {
    return run_mode(spec, Mode::Trim, threads);
}
ExperimentReport run_truncate(const ExperimentSpec& spec, int threads) {
    return run_mode(spec, Mode::Truncate, threads);
}
ExperimentReport run_exceedance(const ExperimentSpec& spec, int threads) {
    return run_mode(spec, Mode::Exceedance, threads);
}

std::vector<CheckpointSummary> summarize(const ExperimentReport& report) {
    std::vector<long long> ns;
    const auto note_n = [&](long long n) {
        if (ns.empty() || ns.back() != n) ns.push_back(n);
    };
    switch (report.mode) {
        case Mode::Trim:
            for (const auto& r : report.trim_rows) note_n(r.n);
            break;
        case Mode::Truncate:
            for (const auto& r : report.truncate_rows) note_n(r.n);
            break;
        case Mode::Exceedance:
            for (const auto& r : report.exceedance_rows) note_n(r.n);
            break;
    }
    if (ns.empty()) throw DomainError("summarize: empty report");

    std::vector<CheckpointSummary> out;
    for (long long n : ns) {
        CheckpointSummary s;
        s.n = n;
        std::vector<double> stats; // ratio (trim/truncate) or normalized deviation (exceedance)
        std::size_t within_above = 0, within_equal = 0, rows_at_n = 0;

        const auto add_ratio = [&](double ratio) {
            ++rows_at_n;
            if (std::isfinite(ratio) && ratio > 0.0)
                stats.push_back(ratio);
            else
                ++s.degenerate;
        };
        switch (report.mode) {
            case Mode::Trim:
                for (const auto& r : report.trim_rows)
                    if (r.n == n) add_ratio(r.ratio);
                break;
            case Mode::Truncate:
                for (const auto& r : report.truncate_rows)
                    if (r.n == n) add_ratio(r.ratio);
                break;
            case Mode::Exceedance:
                for (const auto& r : report.exceedance_rows)
                    if (r.n == n) {
                        ++rows_at_n;
                        const double dev =
                            (static_cast<double>(r.count_above) - r.expect_above) /
                            (r.gamma > 0.0 ? r.gamma : 1.0);
                        stats.push_back(1.0 + dev); // shares the |x - 1| bookkeeping below
                        if (r.within_above) ++within_above;
                        if (r.within_equal) ++within_equal;
                    }
                break;
        }

        s.paths = rows_at_n;
        if (!stats.empty()) {
            std::vector<double> sorted(stats);
            std::sort(sorted.begin(), sorted.end());
            s.median = median_of(sorted);
            double mean = 0.0;
            for (double v : sorted) mean += v;
            s.mean = mean / static_cast<double>(sorted.size());
            s.q25 = quantile_type7(sorted, 0.25);
            s.q75 = quantile_type7(sorted, 0.75);
            std::vector<double> devs;
            devs.reserve(sorted.size());
            for (double v : sorted) devs.push_back(std::abs(v - 1.0));
            std::sort(devs.begin(), devs.end());
            s.max_abs_dev = devs.back();
            s.median_abs_dev = median_of(devs);
        }
        if (report.mode == Mode::Exceedance && rows_at_n > 0) {
            s.within_above_frac = static_cast<double>(within_above) / rows_at_n;
            s.within_equal_frac = static_cast<double>(within_equal) / rows_at_n;
        }
        out.push_back(s);
    }
    return out;
}

} // namespace trimshift
