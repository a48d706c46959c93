#include "trimshift/io.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trimshift/errors.hpp"
#include "trimshift/version.hpp"

namespace trimshift {

namespace {

constexpr const char* kCsvSchemaPrefix = "# trimshift-csv v1 mode=";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) out.push_back(field);
    return out;
}

double parse_double_field(const std::string& s) { return std::strtod(s.c_str(), nullptr); }
long long parse_ll_field(const std::string& s) { return std::strtoll(s.c_str(), nullptr, 10); }

} // namespace

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string report_to_csv(const ExperimentReport& report) {
    std::string out = kCsvSchemaPrefix;
    out += mode_name(report.mode);
    out += " seed=" + std::to_string(report.master_seed) + "\n";
    switch (report.mode) {
        case Mode::Trim:
            out += "n,path,S_n,b_n,S_trim,d_n,ratio\n";
            for (const auto& r : report.trim_rows) {
                out += std::to_string(r.n) + "," + std::to_string(r.path) + "," +
                       format_g17(r.s_n) + "," + std::to_string(r.b_n) + "," +
                       format_g17(r.s_trim) + "," + format_g17(r.d_n) + "," +
                       format_g17(r.ratio) + "\n";
            }
            break;
        case Mode::Truncate:
            out += "n,path,T_n,f_n,expected,ratio,plateau\n";
            for (const auto& r : report.truncate_rows) {
                out += std::to_string(r.n) + "," + std::to_string(r.path) + "," +
                       format_g17(r.t_n) + "," + format_g17(r.f_n) + "," +
                       format_g17(r.expected) + "," + format_g17(r.ratio) + "," +
                       format_g17(r.plateau) + "\n";
            }
            break;
        case Mode::Exceedance:
            out += "n,path,count_above,count_equal,expect_above,expect_equal,gamma,gamma_prime,"
                   "within_above,within_equal\n";
            for (const auto& r : report.exceedance_rows) {
                out += std::to_string(r.n) + "," + std::to_string(r.path) + "," +
                       std::to_string(r.count_above) + "," + std::to_string(r.count_equal) + "," +
                       format_g17(r.expect_above) + "," + format_g17(r.expect_equal) + "," +
                       format_g17(r.gamma) + "," + format_g17(r.gamma_prime) + "," +
                       std::to_string(r.within_above ? 1 : 0) + "," +
                       std::to_string(r.within_equal ? 1 : 0) + "\n";
            }
            break;
    }
    return out;
}

ExperimentReport report_from_csv(const std::string& csv) {
    std::istringstream stream(csv);
    std::string line;
    if (!std::getline(stream, line) || line.rfind(kCsvSchemaPrefix, 0) != 0)
        throw DomainError("report_from_csv: missing schema line");
    std::istringstream schema(line.substr(std::string(kCsvSchemaPrefix).size()));
    std::string mode_token, seed_token;
    schema >> mode_token >> seed_token;

    ExperimentReport report;
    if (mode_token == "trim")
        report.mode = Mode::Trim;
    else if (mode_token == "truncate")
        report.mode = Mode::Truncate;
    else if (mode_token == "exceedance")
        report.mode = Mode::Exceedance;
    else
        throw DomainError("report_from_csv: unknown mode '" + mode_token + "'");
    if (seed_token.rfind("seed=", 0) == 0)
        report.master_seed = std::strtoull(seed_token.c_str() + 5, nullptr, 10);

    if (!std::getline(stream, line)) throw DomainError("report_from_csv: missing header");
    while (std::getline(stream, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        switch (report.mode) {
            case Mode::Trim: {
                if (f.size() != 7) throw DomainError("report_from_csv: bad trim row");
                TrimRow r;
                r.n = parse_ll_field(f[0]);
                r.path = static_cast<int>(parse_ll_field(f[1]));
                r.s_n = parse_double_field(f[2]);
                r.b_n = parse_ll_field(f[3]);
                r.s_trim = parse_double_field(f[4]);
                r.d_n = parse_double_field(f[5]);
                r.ratio = parse_double_field(f[6]);
                report.trim_rows.push_back(r);
                break;
            }
            case Mode::Truncate: {
                if (f.size() != 7) throw DomainError("report_from_csv: bad truncate row");
                TruncateRow r;
                r.n = parse_ll_field(f[0]);
                r.path = static_cast<int>(parse_ll_field(f[1]));
                r.t_n = parse_double_field(f[2]);
                r.f_n = parse_double_field(f[3]);
                r.expected = parse_double_field(f[4]);
                r.ratio = parse_double_field(f[5]);
                r.plateau = parse_double_field(f[6]);
                report.truncate_rows.push_back(r);
                break;
            }
            case Mode::Exceedance: {
                if (f.size() != 10) throw DomainError("report_from_csv: bad exceedance row");
                ExceedanceRow r;
                r.n = parse_ll_field(f[0]);
                r.path = static_cast<int>(parse_ll_field(f[1]));
                r.count_above = parse_ll_field(f[2]);
                r.count_equal = parse_ll_field(f[3]);
                r.expect_above = parse_double_field(f[4]);
                r.expect_equal = parse_double_field(f[5]);
                r.gamma = parse_double_field(f[6]);
                r.gamma_prime = parse_double_field(f[7]);
                r.within_above = parse_ll_field(f[8]) != 0;
                r.within_equal = parse_ll_field(f[9]) != 0;
                report.exceedance_rows.push_back(r);
                break;
            }
        }
    }
    report.summaries = summarize(report);
    for (std::size_t i = 0; i + 1 < report.summaries.size(); ++i)
        if (report.summaries[i + 1].median_abs_dev > report.summaries[i].median_abs_dev)
            return report;
    report.median_dev_nonincreasing = true;
    return report;
}

std::string summary_to_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["schema"] = "trimshift-summary v1";
    j["mode"] = mode_name(report.mode);
    j["master_seed"] = report.master_seed;
    j["median_dev_nonincreasing"] = report.median_dev_nonincreasing;
    j["schedule_warning"] = report.schedule_warning;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : report.summaries) {
        nlohmann::json row;
        row["n"] = s.n;
        row["paths"] = s.paths;
        row["degenerate"] = s.degenerate;
        row["median"] = s.median;
        row["mean"] = s.mean;
        row["q25"] = s.q25;
        row["q75"] = s.q75;
        row["max_abs_dev"] = s.max_abs_dev;
        row["median_abs_dev"] = s.median_abs_dev;
        if (report.mode == Mode::Exceedance) {
            row["within_above_frac"] = s.within_above_frac;
            row["within_equal_frac"] = s.within_equal_frac;
        }
        rows.push_back(row);
    }
    j["checkpoints"] = rows;
    return j.dump(2) + "\n";
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string manifest_to_json(const std::map<std::string, std::string>& config_echo,
                             const ExperimentSpec& spec, int threads,
                             const std::map<std::string, OutputDigest>& outputs) {
    nlohmann::json j;
    j["schema"] = "trimshift-manifest v1";
    j["version"] = kVersion;
    j["mode"] = mode_name(spec.mode);
    j["master_seed"] = spec.master_seed;
    j["threads"] = threads;

    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    j["created_utc"] = stamp;

    j["config"] = config_echo;

    nlohmann::json stochastic = nlohmann::json::array();
    for (double v : spec.measure.stochastic_matrix()) stochastic.push_back(v);
    nlohmann::json stationary = nlohmann::json::array();
    for (double v : spec.measure.stationary_vector()) stationary.push_back(v);
    j["stochastic"] = stochastic;
    j["stationary"] = stationary;

    nlohmann::json outs;
    for (const auto& [name, digest] : outputs) {
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(digest.fnv1a64));
        outs[name] = {{"bytes", digest.bytes}, {"fnv1a64", hex}};
    }
    j["outputs"] = outs;
    return j.dump(2) + "\n";
}

void atomic_write_file(const std::string& path, std::string_view bytes) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("atomic_write_file: cannot open '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("atomic_write_file: short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("atomic_write_file: rename failed: " + ec.message());
    }
}

} // namespace trimshift
