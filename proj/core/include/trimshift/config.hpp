#pragma once

#include <map>
#include <string>
#include <vector>

#include "trimshift/experiment.hpp"

namespace trimshift {

/// Flat key-value experiment configuration ("key = value" lines, '#'
/// comments). Parsing and cross-validation collect every offending key and
/// raise a single ConfigError listing all of them.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_text(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    const std::map<std::string, std::string>& entries() const { return kv_; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;

private:
    std::map<std::string, std::string> kv_;
};

struct AuditSettings {
    double eps0 = 0.9;
    int grid_kmax = 10;
    int gibbs_depth = 8;
    int transfer_depth = 3;
    double k1_ceiling = 100.0;
    double k2_ceiling = 1.0 + 1e-9;
    double k3_ceiling = 2.0 + 2e-9;
};

/// Builds the validated runtime spec (and audit knobs) from a parsed config.
ExperimentSpec build_experiment_spec(const Config& config);
MarkovMeasure build_measure(const Config& config);
AuditSettings build_audit_settings(const Config& config);

/// The documented key set; unknown keys are config errors.
const std::vector<std::string>& known_config_keys();

} // namespace trimshift
