#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pstitch/features.hpp"

namespace pstitch {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& source, const std::string& where, const std::string& what) {
  throw StitchError(ErrorCode::kIngestionError, source + ": " + where + ": " + what);
}

std::vector<double> read_row(const json& row, std::size_t expected, const std::string& source,
                             const std::string& where) {
  if (!row.is_array()) fail(source, where, "expected an array of numbers");
  if (row.size() != expected) {
    fail(source, where,
         "expected " + std::to_string(expected) + " numbers, got " + std::to_string(row.size()));
  }
  std::vector<double> out;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (!row[k].is_number()) fail(source, where + "[" + std::to_string(k) + "]", "not a number");
    const double v = row[k].get<double>();
    if (!std::isfinite(v)) fail(source, where + "[" + std::to_string(k) + "]", "not finite");
    out.push_back(v);
  }
  return out;
}

void check_bounds(const std::optional<ImageBounds>& bounds, const Point2& p, const std::string& source,
                  const std::string& where, const char* image) {
  if (bounds && !bounds->contains(p)) {
    std::ostringstream msg;
    msg << "coordinate (" << p.x() << ", " << p.y() << ") outside the " << image << " image";
    fail(source, where, msg.str());
  }
}

json to_array(const Point2& p, const Point2& q) { return json::array({p.x(), p.y(), q.x(), q.y()}); }

}  // namespace

MatchSet parse_matches(const std::string& text, std::optional<ImageBounds> target,
                       std::optional<ImageBounds> reference, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(source, "parse", e.what());
  }
  if (!doc.is_object()) fail(source, "document", "expected a JSON object");

  MatchSet set;
  if (doc.contains("points")) {
    const json& points = doc["points"];
    if (!points.is_array()) fail(source, "points", "expected an array");
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::string where = "points[" + std::to_string(i) + "]";
      const auto v = read_row(points[i], 4, source, where);
      PointMatch m{Point2(v[0], v[1]), Point2(v[2], v[3]), MatchOrigin::kDetected};
      check_bounds(target, m.p, source, where, "target");
      check_bounds(reference, m.q, source, where, "reference");
      set.points.push_back(m);
    }
  }
  if (doc.contains("lines")) {
    const json& lines = doc["lines"];
    if (!lines.is_array()) fail(source, "lines", "expected an array");
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const std::string where = "lines[" + std::to_string(i) + "]";
      const auto v = read_row(lines[i], 8, source, where);
      LineMatch m{LineSegment(v[0], v[1], v[2], v[3]), LineSegment(v[4], v[5], v[6], v[7])};
      if (!(m.l.length() > 0) || !(m.l_ref.length() > 0)) fail(source, where, "zero-length segment");
      check_bounds(target, m.l.start, source, where, "target");
      check_bounds(target, m.l.end, source, where, "target");
      check_bounds(reference, m.l_ref.start, source, where, "reference");
      check_bounds(reference, m.l_ref.end, source, where, "reference");
      set.lines.push_back(m);
    }
  }
  set.points = dedup_points(set.points);
  return set;
}

MatchSet load_matches(const std::filesystem::path& path, std::optional<ImageBounds> target,
                      std::optional<ImageBounds> reference) {
  std::ifstream in(path);
  if (!in) throw StitchError(ErrorCode::kIoError, "cannot open matches file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_matches(buffer.str(), target, reference, path.string());
}

void save_matches(const std::filesystem::path& path, const MatchSet& matches) {
  json doc;
  doc["points"] = json::array();
  for (const PointMatch& m : matches.points) doc["points"].push_back(to_array(m.p, m.q));
  doc["lines"] = json::array();
  for (const LineMatch& m : matches.lines) {
    doc["lines"].push_back(json::array({m.l.start.x(), m.l.start.y(), m.l.end.x(), m.l.end.y(),
                                        m.l_ref.start.x(), m.l_ref.start.y(), m.l_ref.end.x(),
                                        m.l_ref.end.y()}));
  }
  std::ofstream out(path);
  if (!out) throw StitchError(ErrorCode::kIoError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace pstitch
