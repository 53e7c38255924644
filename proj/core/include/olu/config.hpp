#pragma once

#include "olu/bench.hpp"

#include <filesystem>
#include <string>

namespace olu {

struct LoadedConfig {
  ExperimentConfig experiment;
  GridAxes axes;  // empty unless the file has a [grid] section
};

/// INI sections [experiment], [stream], [optimizer] and [grid]. Keys not
/// listed for a section are rejected. Values override `base`.
LoadedConfig parse_config(const std::string& text, const ExperimentConfig& base);
LoadedConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base);

/// Splits a comma-separated list, trimming blanks.
std::vector<std::string> split_list(std::string_view s);

}  // namespace olu
