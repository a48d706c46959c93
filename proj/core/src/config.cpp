#include "trimshift/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "trimshift/errors.hpp"

namespace trimshift {

namespace {

std::string trim_ws(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

/// Collects validation problems and throws once, listing all of them.
class ErrorSink {
public:
    void add(const std::string& msg) { messages_.push_back(msg); }
    bool empty() const { return messages_.empty(); }
    [[noreturn]] void raise(const std::string& prefix) const {
        std::string joined = prefix + ":";
        for (const auto& m : messages_) joined += "\n  - " + m;
        throw ConfigError(joined);
    }
    void raise_if_any(const std::string& prefix) const {
        if (!empty()) raise(prefix);
    }

private:
    std::vector<std::string> messages_;
};

} // namespace

const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys = {
        "alphabet",      "transition",   "theta",        "stochastic",
        "observable",    "eta",          "special_symbol", "depth_cap",
        "alpha",         "digit_cap",    "schedule",     "beta",
        "b_explicit",    "f_explicit",   "psi",          "psi_param",
        "eps",           "V",            "V_hat",        "mode",
        "checkpoints",   "ensemble",     "master_seed",  "topk_capacity",
        "audit_eps0",    "audit_kmax",   "audit_gibbs_depth", "audit_transfer_depth",
        "audit_k1_ceiling", "audit_k2_ceiling", "audit_k3_ceiling",
    };
    return keys;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str(), path);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
    Config config;
    ErrorSink errors;
    const auto& known = known_config_keys();

    std::istringstream stream(text);
    std::string line;
    int lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim_ws(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.add("line " + std::to_string(lineno) + ": expected 'key = value'");
            continue;
        }
        const std::string key = trim_ws(line.substr(0, eq));
        const std::string value = trim_ws(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            errors.add("line " + std::to_string(lineno) + ": empty key or value");
            continue;
        }
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            errors.add("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            continue;
        }
        if (config.kv_.count(key) != 0) {
            errors.add("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
            continue;
        }
        config.kv_[key] = value;
    }
    errors.raise_if_any("config parse failed (" + origin + ")");
    return config;
}

std::string Config::get_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("config: missing key '" + key + "'");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

namespace {

// Typed readers; parse failures are reported through the sink so every bad
// key surfaces in one pass.

bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

bool parse_int64(const std::string& s, long long& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last;
}

bool parse_uint64(const std::string& s, std::uint64_t& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last;
}

template <typename T, typename Parser>
std::vector<T> parse_list(const std::string& s, Parser parser, bool& ok) {
    std::vector<T> out;
    std::istringstream stream(s);
    std::string token;
    ok = true;
    while (stream >> token) {
        T value{};
        if (!parser(token, value)) {
            ok = false;
            return out;
        }
        out.push_back(value);
    }
    if (out.empty()) ok = false;
    return out;
}

class TypedReader {
public:
    TypedReader(const Config& config, ErrorSink& errors) : config_(config), errors_(errors) {}

    double number(const std::string& key, double fallback) {
        if (!config_.has(key)) return fallback;
        double v;
        if (!parse_double(config_.get_string(key), v)) {
            errors_.add("key '" + key + "': not a number");
            return fallback;
        }
        return v;
    }

    long long integer(const std::string& key, long long fallback) {
        if (!config_.has(key)) return fallback;
        long long v;
        if (!parse_int64(config_.get_string(key), v)) {
            errors_.add("key '" + key + "': not an integer");
            return fallback;
        }
        return v;
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        if (!config_.has(key)) return fallback;
        std::uint64_t v;
        if (!parse_uint64(config_.get_string(key), v)) {
            errors_.add("key '" + key + "': not an unsigned integer");
            return fallback;
        }
        return v;
    }

    std::vector<long long> integer_list(const std::string& key) {
        bool ok = false;
        auto v = parse_list<long long>(config_.get_string(key), parse_int64, ok);
        if (!ok) errors_.add("key '" + key + "': not a whitespace-separated integer list");
        return v;
    }

    std::vector<double> number_list(const std::string& key) {
        bool ok = false;
        auto v = parse_list<double>(config_.get_string(key), parse_double, ok);
        if (!ok) errors_.add("key '" + key + "': not a whitespace-separated number list");
        return v;
    }

private:
    const Config& config_;
    ErrorSink& errors_;
};

} // namespace

MarkovMeasure build_measure(const Config& config) {
    ErrorSink errors;
    TypedReader read(config, errors);

    const long long k = read.integer("alphabet", 0);
    if (!config.has("alphabet")) errors.add("key 'alphabet': required");
    if (!config.has("transition")) errors.add("key 'transition': required");
    if (!config.has("stochastic")) errors.add("key 'stochastic': required");
    errors.raise_if_any("config validation failed");

    std::vector<long long> transition = read.integer_list("transition");
    std::vector<double> stochastic = read.number_list("stochastic");
    const double theta = read.number("theta", 0.5);
    errors.raise_if_any("config validation failed");

    std::vector<int> a(transition.begin(), transition.end());
    try {
        ShiftSystem system(static_cast<int>(k), a, theta);
        return MarkovMeasure(std::move(system), std::move(stochastic));
    } catch (const Error& e) {
        throw ConfigError(std::string("config validation failed:\n  - ") + e.what());
    }
}

ExperimentSpec build_experiment_spec(const Config& config) {
    MarkovMeasure measure = build_measure(config);

    ErrorSink errors;
    TypedReader read(config, errors);

    // Observable.
    const std::string family = config.get_string("observable", "return_time");
    std::shared_ptr<const Observable> observable;
    const double eta = read.number("eta", 4.0);
    const long long special = read.integer("special_symbol", 0);
    const long long depth_cap = read.integer("depth_cap", 100);
    const double alpha = read.number("alpha", 0.5);
    const long long digit_cap = read.integer("digit_cap", 128);

    std::shared_ptr<ReturnTimeObservable> rt;
    if (family == "return_time") {
        try {
            rt = std::make_shared<ReturnTimeObservable>(measure, static_cast<Symbol>(special), eta,
                                                        static_cast<int>(depth_cap));
            observable = rt;
        } catch (const Error& e) {
            errors.add(std::string("observable: ") + e.what());
        }
    } else if (family == "pareto") {
        try {
            // The exact-tail calculus needs the fair full 2-shift underneath.
            bool bernoulli = measure.alphabet_size() == 2;
            if (bernoulli)
                for (int i = 0; i < 2 && bernoulli; ++i)
                    for (int j = 0; j < 2; ++j)
                        if (measure.stochastic(static_cast<Symbol>(i), static_cast<Symbol>(j)) !=
                            0.5)
                            bernoulli = false;
            if (!bernoulli) {
                errors.add("observable: the pareto family requires the full 2-shift with the "
                           "fair Bernoulli stochastic matrix (all entries 0.5)");
            } else {
                observable = std::make_shared<ParetoObservable>(alpha, static_cast<int>(digit_cap));
            }
        } catch (const Error& e) {
            errors.add(std::string("observable: ") + e.what());
        }
    } else {
        errors.add("key 'observable': expected 'return_time' or 'pareto', got '" + family + "'");
    }

    // Psi function.
    const std::string psi_family = config.get_string("psi", "power");
    const double psi_param = read.number("psi_param", 1.0);
    std::vector<PsiFunction> psi;
    try {
        if (psi_family == "power")
            psi.push_back(PsiFunction::power(psi_param));
        else if (psi_family == "exp_poly")
            psi.push_back(PsiFunction::exp_poly(psi_param));
        else
            errors.add("key 'psi': expected 'power' or 'exp_poly', got '" + psi_family + "'");
    } catch (const Error& e) {
        errors.add(std::string("psi: ") + e.what());
    }
    if (psi.empty()) psi.push_back(PsiFunction::power(1.0));

    // Schedule.
    const std::string schedule_kind = config.get_string("schedule", "power");
    const double beta = read.number("beta", 0.6);
    std::vector<TrimSchedule> schedule;
    try {
        if (schedule_kind == "power") {
            schedule.push_back(TrimSchedule::power(beta));
        } else if (schedule_kind == "stpete") {
            if (rt)
                schedule.push_back(
                    TrimSchedule::st_petersburg(rt->q(), rt->level_constant(), beta, psi.front()));
            else
                errors.add("key 'schedule': the stpete schedule requires the return_time "
                           "observable");
        } else if (schedule_kind == "explicit") {
            if (!config.has("b_explicit")) {
                errors.add("key 'b_explicit': required for the explicit schedule");
            } else {
                auto bs = read.integer_list("b_explicit");
                auto ns = read.integer_list("checkpoints");
                if (bs.size() == ns.size())
                    schedule.push_back(TrimSchedule::explicit_list(ns, bs));
                else
                    errors.add("key 'b_explicit': must match the checkpoint list length");
            }
        } else {
            errors.add("key 'schedule': expected 'power', 'stpete' or 'explicit', got '" +
                       schedule_kind + "'");
        }
    } catch (const Error& e) {
        errors.add(std::string("schedule: ") + e.what());
    }
    if (schedule.empty()) schedule.push_back(TrimSchedule::power(0.6));

    // Mode and run parameters.
    const std::string mode_str = config.get_string("mode", "trim");
    Mode mode = Mode::Trim;
    if (mode_str == "trim")
        mode = Mode::Trim;
    else if (mode_str == "truncate")
        mode = Mode::Truncate;
    else if (mode_str == "exceedance")
        mode = Mode::Exceedance;
    else
        errors.add("key 'mode': expected 'trim', 'truncate' or 'exceedance', got '" + mode_str +
                   "'");

    std::vector<long long> checkpoints;
    if (config.has("checkpoints"))
        checkpoints = read.integer_list("checkpoints");
    else
        errors.add("key 'checkpoints': required");

    std::vector<double> f_explicit;
    if (config.has("f_explicit")) f_explicit = read.number_list("f_explicit");

    const long long ensemble = read.integer("ensemble", 1);
    const std::uint64_t master_seed = read.unsigned_integer("master_seed", 0);
    const long long topk = read.integer("topk_capacity", 1 << 16);
    const double eps = read.number("eps", 0.1);
    const double v = read.number("V", 0.0);
    const double v_hat = read.number("V_hat", 3.0);

    errors.raise_if_any("config validation failed");

    ExperimentSpec spec{std::move(measure),
                        std::move(observable),
                        std::move(schedule.front()),
                        std::move(psi.front()),
                        mode,
                        eps,
                        v,
                        v_hat,
                        std::move(checkpoints),
                        std::move(f_explicit),
                        static_cast<int>(ensemble),
                        master_seed,
                        static_cast<std::size_t>(topk)};
    return spec;
}

AuditSettings build_audit_settings(const Config& config) {
    ErrorSink errors;
    TypedReader read(config, errors);
    AuditSettings s;
    s.eps0 = read.number("audit_eps0", s.eps0);
    s.grid_kmax = static_cast<int>(read.integer("audit_kmax", s.grid_kmax));
    s.gibbs_depth = static_cast<int>(read.integer("audit_gibbs_depth", s.gibbs_depth));
    s.transfer_depth = static_cast<int>(read.integer("audit_transfer_depth", s.transfer_depth));
    s.k1_ceiling = read.number("audit_k1_ceiling", s.k1_ceiling);
    s.k2_ceiling = read.number("audit_k2_ceiling", s.k2_ceiling);
    s.k3_ceiling = read.number("audit_k3_ceiling", s.k3_ceiling);
    errors.raise_if_any("config validation failed");
    return s;
}

} // namespace trimshift
