// Command-line front end: simulate / spectrum / audit / summarize.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "trimshift/config.hpp"
#include "trimshift/errors.hpp"
#include "trimshift/io.hpp"
#include "trimshift/spectral.hpp"
#include "trimshift/version.hpp"

namespace {

using namespace trimshift;

int resolve_threads(int cli_threads) {
    if (cli_threads > 0) return cli_threads;
    if (const char* env = std::getenv("TRIMSHIFT_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, int threads,
                 const std::string& seed_override) {
    Config config = Config::parse_file(config_path);
    ExperimentSpec spec = build_experiment_spec(config);
    if (!seed_override.empty()) spec.master_seed = std::strtoull(seed_override.c_str(), nullptr, 10);

    const int worker_count = resolve_threads(threads);
    const ExperimentReport report = run_experiment(spec, worker_count);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const std::string csv = report_to_csv(report);
    const std::string summary = summary_to_json(report);

    std::map<std::string, OutputDigest> digests;
    digests["report.csv"] = {fnv1a64(csv), csv.size()};
    digests["summary.json"] = {fnv1a64(summary), summary.size()};

    std::map<std::string, std::string> echo = config.entries();
    if (!seed_override.empty()) echo["master_seed"] = std::to_string(spec.master_seed);
    const std::string manifest = manifest_to_json(echo, spec, worker_count, digests);

    atomic_write_file((fs::path(out_dir) / "report.csv").string(), csv);
    atomic_write_file((fs::path(out_dir) / "summary.json").string(), summary);
    atomic_write_file((fs::path(out_dir) / "manifest.json").string(), manifest);

    std::cout << "mode " << mode_name(report.mode) << ", " << spec.ensemble << " paths, seed "
              << spec.master_seed << ", threads " << worker_count << "\n";
    for (const auto& s : report.summaries) {
        std::cout << "n=" << s.n << " paths=" << s.paths << " degenerate=" << s.degenerate;
        if (report.mode == Mode::Exceedance) {
            std::cout << " within_above=" << s.within_above_frac
                      << " within_equal=" << s.within_equal_frac;
        } else {
            std::cout << " median=" << format_g17(s.median)
                      << " median|r-1|=" << format_g17(s.median_abs_dev);
        }
        std::cout << "\n";
    }
    std::cout << "wrote report.csv summary.json manifest.json to " << out_dir << "\n";
    return 0;
}

int cmd_spectrum(const std::string& config_path, int depth) {
    Config config = Config::parse_file(config_path);
    MarkovMeasure measure = build_measure(config);
    const TransferMatrix transfer = assemble_transfer(measure, depth);
    const EigenPair lead = leading_eigenpair(transfer);
    const double gap = spectral_gap(transfer);

    nlohmann::json j;
    j["depth"] = depth;
    j["dim"] = transfer.dim();
    j["lambda1"] = lead.lambda;
    j["gap"] = gap;
    nlohmann::json vec = nlohmann::json::array();
    for (double v : lead.eigvec) vec.push_back(v);
    j["eigvec"] = vec;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_audit(const std::string& config_path) {
    Config config = Config::parse_file(config_path);
    ExperimentSpec spec = build_experiment_spec(config);
    const AuditSettings settings = build_audit_settings(config);

    const auto* rt = dynamic_cast<const ReturnTimeObservable*>(spec.observable.get());
    if (rt == nullptr)
        throw UnsupportedObservableError(
            "audit: truncations of this observable are not cylinder-measurable at finite depth; "
            "configure the return_time observable");

    const GibbsBracket gibbs = spec.measure.verify_gibbs(settings.gibbs_depth);
    std::cout << "gibbs bracket (depth " << settings.gibbs_depth << "): ["
              << format_g17(gibbs.lower) << ", " << format_g17(gibbs.upper) << "]\n";

    const TransferMatrix transfer = assemble_transfer(spec.measure, settings.transfer_depth);
    const double gap = spectral_gap(transfer);
    std::cout << "transfer spectral gap (depth " << settings.transfer_depth
              << "): " << format_g17(gap) << "\n";

    std::vector<double> levels;
    for (int k = 0; k <= settings.grid_kmax; ++k) levels.push_back(rt->level_value(k));
    const PropertyAudit audit = property_f_audit(*rt, spec.measure, settings.eps0, levels);

    std::cout << "level grid: eta^0 .. eta^" << settings.grid_kmax << ", eps0 = " << settings.eps0
              << "\n";
    std::printf("%-14s %-22s %-22s %-22s\n", "level", "|trunc|/level", "|1{chi>=l}|",
                "|1{chi=l}|");
    for (const auto& row : audit.rows)
        std::printf("%-14.6g %-22.17g %-22.17g %-22.17g\n", row.level, row.truncated_ratio,
                    row.exceedance_norm, row.atom_norm);

    bool pass = true;
    const auto verdict = [&](const char* name, double value, double ceiling) {
        const bool ok = std::isfinite(value) && value <= ceiling;
        if (!ok) pass = false;
        std::printf("%s = %.17g (ceiling %.17g) %s\n", name, value, ceiling,
                    ok ? "PASS" : "FAIL");
    };
    verdict("K1_hat", audit.k1_hat, settings.k1_ceiling);
    verdict("K2_hat", audit.k2_hat, settings.k2_ceiling);
    verdict("K3_hat", audit.k3_hat, settings.k3_ceiling);

    const bool gap_ok = gap < 1.0;
    if (!gap_ok) pass = false;
    std::printf("spectral gap %s, gibbs bracket %s\n", gap_ok ? "PASS" : "FAIL",
                (gibbs.lower > 0.0 && std::isfinite(gibbs.upper)) ? "PASS" : "FAIL");
    if (!(gibbs.lower > 0.0 && std::isfinite(gibbs.upper))) pass = false;
    return pass ? 0 : 1;
}

int cmd_summarize(const std::string& report_path, const std::string& out_path) {
    std::ifstream in(report_path, std::ios::binary);
    if (!in) throw Error("summarize: cannot open '" + report_path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const ExperimentReport report = report_from_csv(buffer.str());

    std::printf("%-12s %-8s %-10s %-22s %-22s %-22s\n", "n", "paths", "degenerate", "median",
                "median|r-1|", "max|r-1|");
    for (const auto& s : report.summaries)
        std::printf("%-12lld %-8zu %-10zu %-22.17g %-22.17g %-22.17g\n", s.n, s.paths,
                    s.degenerate, s.median, s.median_abs_dev, s.max_abs_dev);

    if (!out_path.empty()) atomic_write_file(out_path, summary_to_json(report));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"subshift trimmed-sum simulator"};
    app.set_version_flag("--version", trimshift::kVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", seed_override, report_path, out_path;
    int threads = 0, depth = 1;

    auto* simulate = app.add_subcommand("simulate", "run the configured ensemble experiment");
    simulate->add_option("--config", config_path, "experiment config file")->required();
    simulate->add_option("--out", out_dir, "output directory");
    simulate->add_option("--threads", threads, "worker threads (default: TRIMSHIFT_THREADS or hw)");
    simulate->add_option("--seed-override", seed_override, "replace the configured master seed");

    auto* spectrum = app.add_subcommand("spectrum", "transfer-operator eigendata as JSON");
    spectrum->add_option("--config", config_path, "measure config file")->required();
    spectrum->add_option("--depth", depth, "cylinder depth (1..12)")->required();

    auto* audit = app.add_subcommand("audit", "quasi-Hoelder / Gibbs / spectral-gap audit");
    audit->add_option("--config", config_path, "experiment config file")->required();

    auto* summarize_cmd = app.add_subcommand("summarize", "recompute the summary of a report CSV");
    summarize_cmd->add_option("report", report_path, "report.csv produced by simulate")->required();
    summarize_cmd->add_option("--out", out_path, "also write summary JSON here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(config_path, out_dir, threads, seed_override);
        if (spectrum->parsed()) return cmd_spectrum(config_path, depth);
        if (audit->parsed()) return cmd_audit(config_path);
        if (summarize_cmd->parsed()) return cmd_summarize(report_path, out_path);
    } catch (const trimshift::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
