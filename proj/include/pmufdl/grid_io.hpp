#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "pmufdl/grid.hpp"

namespace pmufdl {

/// Grid description in JSON. Top-level keys: NODES, BRANCHES, SOURCES,
/// LOADS, FREQUENCY and optionally NOMINAL_VOLTAGE. Complex numbers are
/// [re, im] pairs; 3x3 matrices are row-major nested arrays of pairs.
/// See README for the field list.
GridModel parseGrid(const nlohmann::json& doc);
GridModel loadGrid(const std::filesystem::path& path);
/// Parses text; parse errors are reported with a line number.
GridModel parseGridText(const std::string& text);

nlohmann::json gridToJson(const GridModel& grid);
void saveGrid(const GridModel& grid, const std::filesystem::path& path);

}  // namespace pmufdl
