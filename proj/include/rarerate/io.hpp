#pragma once

// File formats: weights and segments CSV, JSON scenario configs, and
// coverage-report CSV.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rarerate/core.hpp"
#include "rarerate/next_weight.hpp"
#include "rarerate/simulator.hpp"

namespace rarerate::io {

/// Splits one CSV line; double quotes may wrap fields containing commas.
std::vector<std::string> split_csv_line(std::string_view line);

/// Header `weight,category` (the category column may be omitted).
WeightSample parse_weights_csv(std::istream& in);
WeightSample read_weights_csv(const std::filesystem::path& path);
void write_weights_csv(std::ostream& out, const WeightSample& sample);

/// Header `segment_id,s_prob,h_prob,p_prob,simulated,reviewed,outcome`.
std::vector<SegmentRecord> parse_segments_csv(std::istream& in);
std::vector<SegmentRecord> read_segments_csv(const std::filesystem::path& path);
void write_segments_csv(std::ostream& out, std::span<const SegmentRecord> records);

/// Expands a JSON scenario config into study cells, gamma-major then budget.
/// Unknown keys and out-of-range values raise ConfigError.
std::vector<Scenario> parse_scenario_config(std::string_view json_text);
std::vector<Scenario> load_scenario_config(const std::filesystem::path& path);

inline constexpr std::string_view kCoverageHeader =
    "budget,gamma,method,coverage_error,mean_width,replicates,mean_point_estimate,failures";

void write_coverage_csv(std::ostream& out, const CoverageReport& report);
/// Reads rows written by write_coverage_csv; the last two columns are optional.
std::vector<CoverageRow> parse_coverage_csv(std::istream& in);

}  // namespace rarerate::io
