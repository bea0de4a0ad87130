#pragma once

#include <filesystem>
#include <string>

#include "pstitch/geometry.hpp"
#include "pstitch/metrics.hpp"

namespace pstitch {

/// {"rows", "cols", "cell_w", "cell_h", "origin", "width", "height", "vertices"}
std::string mesh_to_json(const MeshWarp& warp);
MeshWarp mesh_from_json(const std::string& text, const std::string& source = "<memory>");

/// Metric values, pair count and the conventions used to compute them.
std::string report_to_json(const MetricReport& report, const std::string& extra_json = "");

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace pstitch
