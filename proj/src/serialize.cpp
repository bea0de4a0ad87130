#include "pstitch/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pstitch {
namespace {

using nlohmann::json;

json segment_json(const LineSegment& s) { return {s.start.x(), s.start.y(), s.end.x(), s.end.y()}; }

}  // namespace

std::string mesh_to_json(const MeshWarp& warp) {
  const MeshGrid& m = warp.mesh;
  json j;
  j["rows"] = m.rows;
  j["cols"] = m.cols;
  j["cell_w"] = m.cell_w;
  j["cell_h"] = m.cell_h;
  j["origin"] = {m.origin.x(), m.origin.y()};
  j["width"] = m.width;
  j["height"] = m.height;
  j["vertices"] = std::vector<double>(warp.vertices.data(), warp.vertices.data() + warp.vertices.size());
  return j.dump(2) + "\n";
}

MeshWarp mesh_from_json(const std::string& text, const std::string& source) {
  auto fail = [&](const std::string& what) -> MeshWarp {
    throw StitchError(ErrorCode::kIngestionError, source + ": " + what);
  };
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    return fail(e.what());
  }
  MeshWarp warp;
  try {
    MeshGrid& m = warp.mesh;
    m.rows = j.at("rows").get<int>();
    m.cols = j.at("cols").get<int>();
    m.cell_w = j.at("cell_w").get<double>();
    m.cell_h = j.at("cell_h").get<double>();
    const auto origin = j.at("origin").get<std::vector<double>>();
    if (origin.size() != 2) return fail("origin: expected 2 numbers");
    m.origin = Point2(origin[0], origin[1]);
    m.width = j.at("width").get<double>();
    m.height = j.at("height").get<double>();
    const auto v = j.at("vertices").get<std::vector<double>>();
    if (m.rows <= 0 || m.cols <= 0 || !(m.cell_w > 0) || !(m.cell_h > 0)) return fail("invalid grid size");
    if (static_cast<int>(v.size()) != m.unknowns()) {
      return fail("vertices: expected " + std::to_string(m.unknowns()) + " numbers, got " +
                  std::to_string(v.size()));
    }
    warp.vertices = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  } catch (const json::exception& e) {
    return fail(e.what());
  }
  if (!warp.vertices.allFinite()) return fail("vertices: non-finite coordinate");
  return warp;
}

std::string report_to_json(const MetricReport& report, const std::string& extra_json) {
  json j;
  j["rmse"] = report.rmse;
  j["d_dis"] = report.d_dis;
  j["d_dir"] = report.d_dir;
  j["K"] = report.k;
  j["excluded_degenerate"] = report.excluded_degenerate;
  json pairs = json::array();
  for (const IndirectPair& p : report.per_pair) {
    pairs.push_back({{"point", p.point_index},
                     {"line", p.line_index},
                     {"l1", segment_json(p.l1)},
                     {"l2", segment_json(p.l2)},
                     {"l1_hat", segment_json(p.l1_hat)},
                     {"l2_hat", segment_json(p.l2_hat)}});
  }
  j["per_pair"] = std::move(pairs);
  j["metadata"] = {{"d_dir_unit_vectors", report.d_dir_normalized},
                   {"d_dir_abs_per_pair", true},
                   {"pairs", "point-to-line-endpoint legs, nearest lines per point"}};
  if (!extra_json.empty()) j["run"] = json::parse(extra_json);
  return j.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StitchError(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw StitchError(ErrorCode::kIoError, "failed while writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StitchError(ErrorCode::kIoError, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace pstitch
