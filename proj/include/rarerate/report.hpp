#pragma once

// Coverage-study rendering: per-gamma pivot tables and SVG charts with
// coverage error against budget (left) and mean width on a log axis (right).

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rarerate/simulator.hpp"

namespace rarerate::report {

/// Distinct gamma labels in order of first appearance.
std::vector<std::string> gamma_labels(std::span<const CoverageRow> rows);

/// One row per budget; a coverage-error and a width column per method.
std::string pivot_csv(std::span<const CoverageRow> rows, const std::string& gamma);

std::string render_svg(std::span<const CoverageRow> rows, const std::string& gamma);

/// Writes `<prefix>_gamma-<label>.csv` and `.svg` for every gamma; returns
/// the written paths. Throws NoRows when `rows` is empty.
std::vector<std::filesystem::path> write_report(std::span<const CoverageRow> rows,
                                                const std::string& out_prefix);

}  // namespace rarerate::report
