#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "trimshift/experiment.hpp"

namespace trimshift {

/// CSV serialization of a report. Schema line, fixed column order per mode,
/// numerics at 17 significant digits (lossless double round trip).
std::string report_to_csv(const ExperimentReport& report);
ExperimentReport report_from_csv(const std::string& csv);

/// Summary JSON (per-checkpoint order statistics plus trend flags).
std::string summary_to_json(const ExperimentReport& report);

struct OutputDigest {
    std::uint64_t fnv1a64 = 0;
    std::size_t bytes = 0;
};

std::string manifest_to_json(const std::map<std::string, std::string>& config_echo,
                             const ExperimentSpec& spec, int threads,
                             const std::map<std::string, OutputDigest>& outputs);

std::uint64_t fnv1a64(std::string_view bytes);

/// Writes via a temp file in the same directory plus rename, so the target
/// is either fully written or absent.
void atomic_write_file(const std::string& path, std::string_view bytes);

std::string format_g17(double v);

} // namespace trimshift
