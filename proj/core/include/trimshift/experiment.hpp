#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "trimshift/norming.hpp"
#include "trimshift/observable.hpp"

namespace trimshift {

enum class Mode { Trim, Truncate, Exceedance };

const char* mode_name(Mode mode);

/// Fully validated runtime description of an ensemble experiment.
struct ExperimentSpec {
    MarkovMeasure measure;
    std::shared_ptr<const Observable> observable;
    TrimSchedule schedule;
    PsiFunction psi;
    Mode mode = Mode::Trim;
    double eps = 0.1;    ///< exponent split in c_{eps,psi}
    double v = 0.0;      ///< V in the f_n definition (0 keeps f_n at the raw quantile)
    double v_hat = 3.0;  ///< envelope multiplier for the exceedance deviations
    std::vector<long long> checkpoints;
    std::vector<double> f_explicit; ///< optional direct thresholds (truncate/exceedance)
    int ensemble = 1;
    std::uint64_t master_seed = 0;
    std::size_t topk_capacity = std::size_t{1} << 16;
};

struct TrimRow {
    long long n = 0;
    int path = 0;
    double s_n = 0.0;
    long long b_n = 0;
    double s_trim = 0.0;
    double d_n = 0.0;
    double ratio = 0.0;
};

struct TruncateRow {
    long long n = 0;
    int path = 0;
    double t_n = 0.0;
    double f_n = 0.0;
    double expected = 0.0; ///< n * E[chi; chi <= f_n]
    double ratio = 0.0;
    double plateau = 0.0;  ///< f_n^(-log q/log eta) log psi(floor(log n)) / n
};

struct ExceedanceRow {
    long long n = 0;
    int path = 0;
    long long count_above = 0;
    long long count_equal = 0;
    double expect_above = 0.0; ///< n mu(chi > f_n)
    double expect_equal = 0.0; ///< n mu(chi = f_n)
    double gamma = 0.0;        ///< V-hat * c(n mu(chi > f_n), n)
    double gamma_prime = 0.0;  ///< V-hat * c(n mu(chi = f_n), n)
    bool within_above = false;
    bool within_equal = false;
};

struct CheckpointSummary {
    long long n = 0;
    std::size_t paths = 0;
    std::size_t degenerate = 0; ///< rows excluded from the ratio statistics
    double median = 0.0;
    double mean = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    double max_abs_dev = 0.0;    ///< max |ratio - 1| (trim/truncate) or |dev|/gamma (exceedance)
    double median_abs_dev = 0.0;
    double within_above_frac = 0.0; ///< exceedance only
    double within_equal_frac = 0.0; ///< exceedance only
};

struct ExperimentReport {
    Mode mode = Mode::Trim;
    std::uint64_t master_seed = 0;
    std::vector<TrimRow> trim_rows;           // checkpoint-major, path-minor
    std::vector<TruncateRow> truncate_rows;
    std::vector<ExceedanceRow> exceedance_rows;
    std::vector<CheckpointSummary> summaries;
    bool median_dev_nonincreasing = false;
    bool schedule_warning = false;
};

/// Runs the configured ensemble. Paths are independent deterministic work
/// units keyed by (master_seed, path_index); any thread count produces the
/// same report. Observable caps abort the whole run with the offending path
/// and position in the message.
ExperimentReport run_experiment(const ExperimentSpec& spec, int threads = 1);

ExperimentReport run_trim(const ExperimentSpec& spec, int threads = 1);
ExperimentReport run_truncate(const ExperimentSpec& spec, int threads = 1);
ExperimentReport run_exceedance(const ExperimentSpec& spec, int threads = 1);

/// Ensemble statistics per checkpoint (order-statistic based, permutation
/// invariant). Degenerate ratios (nonpositive or non-finite) are excluded
/// and counted. DomainError on an empty report.
std::vector<CheckpointSummary> summarize(const ExperimentReport& report);

} // namespace trimshift
