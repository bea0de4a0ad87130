#include "pstitch/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace pstitch {
namespace {

using nlohmann::json;

class Section {
 public:
  Section(const json& j, std::string path, const std::string& source) : j_(j), path_(std::move(path)), source_(source) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  template <typename T>
  bool read(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return false;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) fail(key, "expected true or false");
      } else {
        if (!it->is_number()) fail(key, "expected a number");
      }
      out = it->get<T>();
    } catch (const json::exception& e) {
      fail(key, e.what());
    }
    return true;
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    static const json empty = json::object();
    return Section(it == j_.end() ? empty : *it, qualify(key), source_);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(key, "unknown setting");
    }
  }

 private:
  std::string qualify(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw StitchError(ErrorCode::kInvalidArgument, source_ + ": " + qualify(key) + ": " + what);
  }

  const json& j_;
  std::string path_;
  const std::string& source_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw StitchError(ErrorCode::kInvalidArgument, what);
}

}  // namespace

FileSettings apply_config_json(RunConfig& cfg, const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw StitchError(ErrorCode::kInvalidArgument, source + ": " + e.what());
  }
  FileSettings set;
  Section top(root, "", source);
  top.read("grid_size", cfg.grid_size);
  top.read("global_line_ratio", cfg.global_line_ratio);
  top.read("prewarp_normals", cfg.prewarp_normals);
  top.read("d_dir_raw", cfg.d_dir_raw);
  top.read("seed", cfg.seed);
  {
    Section w = top.child("weights");
    w.read("point", cfg.weights.point);
    w.read("sd", cfg.weights.sd);
    w.read("sa", cfg.weights.sa);
    w.read("l", cfg.weights.line);
    w.read("gh", cfg.weights.gh);
    w.read("ov", cfg.weights.ov);
    w.read("nv", cfg.weights.nv);
    w.read("ll", cfg.weights.ll);
    w.read("gl", cfg.weights.gl);
    w.finish();
  }
  {
    Section c = top.child("connection");
    c.read("slope_tol", cfg.connection.slope_tol);
    set.dist_tol = c.read("dist_tol", cfg.connection.dist_tol);
    c.finish();
  }
  {
    Section p = top.child("plane");
    p.read("max_stars_per_point", cfg.plane.max_stars_per_point);
    set.min_leg_length = p.read("min_leg_length", cfg.plane.min_leg_length);
    set.plane_spacing = p.read("sample_spacing", cfg.plane.sample_spacing);
    p.read("min_apex_distance", cfg.plane.min_apex_distance);
    p.finish();
  }
  {
    Section d = top.child("detector");
    d.read("pyramid_scale", cfg.detector.pyramid_scale);
    d.read("pyramid_levels", cfg.detector.pyramid_levels);
    d.read("max_points", cfg.detector.max_points);
    d.read("line_grad_threshold", cfg.detector.line_grad_threshold);
    d.read("max_lines", cfg.detector.max_lines);
    d.read("min_line_length", cfg.detector.min_line_length);
    d.read("angle_tolerance_deg", cfg.detector.angle_tolerance_deg);
    d.read("ratio_test", cfg.detector.ratio_test);
    d.finish();
  }
  {
    Section r = top.child("ransac");
    r.read("inlier_threshold", cfg.ransac.inlier_threshold);
    r.read("confidence", cfg.ransac.confidence);
    r.read("max_iterations", cfg.ransac.max_iterations);
    r.finish();
  }
  {
    Section e = top.child("extension");
    set.extension_padding = e.read("padding", cfg.extension.padding);
    e.read("min_angle_deg", cfg.extension.min_angle_deg);
    e.read("dedup_radius", cfg.extension.dedup_radius);
    e.finish();
  }
  {
    Section s = top.child("solver");
    s.read("factorization_memory_cap", cfg.solver.factorization_memory_cap);
    s.read("cg_tolerance", cfg.solver.cg_tolerance);
    s.finish();
  }
  top.finish();
  return set;
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& file, const ConfigOverrides& o) {
  RunConfig cfg;
  FileSettings set;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw StitchError(ErrorCode::kIoError, "cannot read config " + file->string());
    std::stringstream buf;
    buf << in.rdbuf();
    set = apply_config_json(cfg, buf.str(), file->string());
  }
  if (o.grid_size) cfg.grid_size = *o.grid_size;
  if (o.lambda_sd) cfg.weights.sd = *o.lambda_sd;
  if (o.lambda_sa) cfg.weights.sa = *o.lambda_sa;
  if (o.lambda_l) cfg.weights.line = *o.lambda_l;
  if (o.lambda_gh) cfg.weights.gh = *o.lambda_gh;
  if (o.lambda_ov) cfg.weights.ov = *o.lambda_ov;
  if (o.lambda_nv) cfg.weights.nv = *o.lambda_nv;
  if (o.lambda_ll) cfg.weights.ll = *o.lambda_ll;
  if (o.lambda_gl) cfg.weights.gl = *o.lambda_gl;
  if (o.slope_tol) cfg.connection.slope_tol = *o.slope_tol;
  if (o.dist_tol) {
    cfg.connection.dist_tol = *o.dist_tol;
    set.dist_tol = true;
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.d_dir_raw) cfg.d_dir_raw = *o.d_dir_raw;

  if (!set.dist_tol) cfg.connection.dist_tol = 0.5 * cfg.grid_size;
  if (!set.plane_spacing) cfg.plane.sample_spacing = cfg.grid_size;
  if (!set.min_leg_length) cfg.plane.min_leg_length = cfg.grid_size;
  if (!set.extension_padding) cfg.extension.padding = cfg.grid_size;
  cfg.ransac.seed = cfg.seed;
  validate(cfg);
  return cfg;
}

void validate(const RunConfig& cfg) {
  require(cfg.grid_size > 0, "grid size must be positive");
  const EnergyWeights& w = cfg.weights;
  for (const Term t : kAllTerms) {
    require(w.of(t) >= 0, "weight lambda_" + std::string(term_name(t)) + " must be >= 0");
  }
  require(cfg.connection.slope_tol > 0 && cfg.connection.dist_tol > 0, "connection tolerances must be positive");
  require(cfg.plane.max_stars_per_point > 0 && cfg.plane.min_leg_length > 0 && cfg.plane.sample_spacing > 0,
          "plane policy values must be positive");
  require(cfg.detector.pyramid_scale > 1, "pyramid scale must exceed 1");
  require(cfg.detector.pyramid_levels >= 1 && cfg.detector.max_points > 0 && cfg.detector.max_lines >= 0,
          "detector counts out of range");
  require(cfg.detector.ratio_test > 0 && cfg.detector.ratio_test <= 1, "ratio test must be in (0, 1]");
  require(cfg.ransac.inlier_threshold > 0 && cfg.ransac.confidence > 0 && cfg.ransac.confidence < 1,
          "RANSAC settings out of range");
  require(cfg.global_line_ratio >= 0, "global line ratio must be >= 0");
  require(cfg.extension.padding >= 0, "extension padding must be >= 0");
}

std::string config_to_json(const RunConfig& cfg) {
  const EnergyWeights& w = cfg.weights;
  json j;
  j["grid_size"] = cfg.grid_size;
  j["weights"] = {{"point", w.point}, {"sd", w.sd}, {"sa", w.sa}, {"l", w.line}, {"gh", w.gh},
                  {"ov", w.ov},       {"nv", w.nv}, {"ll", w.ll}, {"gl", w.gl}};
  j["connection"] = {{"slope_tol", cfg.connection.slope_tol}, {"dist_tol", cfg.connection.dist_tol}};
  j["plane"] = {{"max_stars_per_point", cfg.plane.max_stars_per_point},
                {"min_leg_length", cfg.plane.min_leg_length},
                {"sample_spacing", cfg.plane.sample_spacing},
                {"min_apex_distance", cfg.plane.min_apex_distance}};
  j["detector"] = {{"pyramid_scale", cfg.detector.pyramid_scale},
                   {"pyramid_levels", cfg.detector.pyramid_levels},
                   {"max_points", cfg.detector.max_points},
                   {"line_grad_threshold", cfg.detector.line_grad_threshold},
                   {"max_lines", cfg.detector.max_lines},
                   {"min_line_length", cfg.detector.min_line_length},
                   {"angle_tolerance_deg", cfg.detector.angle_tolerance_deg},
                   {"ratio_test", cfg.detector.ratio_test}};
  j["ransac"] = {{"inlier_threshold", cfg.ransac.inlier_threshold},
                 {"confidence", cfg.ransac.confidence},
                 {"max_iterations", cfg.ransac.max_iterations}};
  j["extension"] = {{"padding", cfg.extension.padding},
                    {"min_angle_deg", cfg.extension.min_angle_deg},
                    {"dedup_radius", cfg.extension.dedup_radius}};
  j["solver"] = {{"factorization_memory_cap", cfg.solver.factorization_memory_cap},
                 {"cg_tolerance", cfg.solver.cg_tolerance}};
  j["global_line_ratio"] = cfg.global_line_ratio;
  j["prewarp_normals"] = cfg.prewarp_normals;
  j["d_dir_raw"] = cfg.d_dir_raw;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

}  // namespace pstitch
