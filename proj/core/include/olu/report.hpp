#pragma once

#include "olu/bench.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace olu {

enum class OutputFormat { Csv, Json };
OutputFormat parse_output_format(std::string_view s);

/// Shortest round-trip decimal; NaN prints as "nan".
std::string format_number(double v);

const std::vector<std::string>& result_columns();
/// Columns that depend on the machine rather than the inputs.
bool is_timing_column(std::string_view column);

std::string results_csv(const std::vector<RunResult>& runs);
std::string results_json(const std::vector<RunResult>& runs);
std::string trace_csv(const MethodResult& m);
std::string summary_csv(const std::vector<MethodSummary>& summaries);

/// Writes to a sibling temporary file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// results.{csv,json}, plus trace_<method>.csv per method when `traces` is set
/// and summary.csv when more than one run is given.
void write_outputs(const std::filesystem::path& dir, const std::vector<RunResult>& runs,
                   OutputFormat format, bool traces);

}  // namespace olu
