#include "pstitch/pipeline.hpp"

#include <json.hpp>

#include "pstitch/line_ops.hpp"
#include "pstitch/plane.hpp"

namespace pstitch {
namespace {

using nlohmann::json;

template <typename F>
auto in_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StitchError& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(name);
  }
}

ImageBounds bounds_of(const Image& img) {
  return {static_cast<double>(img.width), static_cast<double>(img.height)};
}

json segment_json(const LineSegment& s) { return {s.start.x(), s.start.y(), s.end.x(), s.end.y()}; }

json point_match_json(const PointMatch& m) {
  return {{"p", {m.p.x(), m.p.y()}},
          {"q", {m.q.x(), m.q.y()}},
          {"origin", m.origin == MatchOrigin::kExtended ? "extended" : "detected"}};
}

json groups_json(const LineGroupSet& groups) {
  json out = json::array();
  for (std::size_t g = 0; g < groups.groups.size(); ++g) {
    out.push_back({{"members", groups.groups[g]}, {"merged", segment_json(groups.merged[g])}});
  }
  return out;
}

json stars_json(const std::vector<PlaneStar>& stars) {
  json out = json::array();
  for (const PlaneStar& s : stars) {
    out.push_back({{"point", s.point_index},
                   {"line", s.line_index},
                   {"apex", {s.apex.x(), s.apex.y()}},
                   {"base", segment_json(s.base)}});
  }
  return out;
}

std::vector<LineSegment> target_side(const std::vector<LineMatch>& lines) {
  std::vector<LineSegment> out;
  for (const LineMatch& m : lines) out.push_back(m.l);
  return out;
}

}  // namespace

FeatureStage build_features(const Image& target, const Image& reference, const RunConfig& cfg,
                            const std::optional<MatchSet>& matches) {
  FeatureStage out;
  const ImageBounds tb = bounds_of(target);
  const ImageBounds rb = bounds_of(reference);
  std::vector<PointMatch> candidates;
  std::vector<LineMatch> raw_lines;
  std::vector<LineSegment> lines_t, lines_r;

  in_stage("feature-pipeline", [&] {
    if (matches) {
      candidates = matches->points;
      raw_lines = matches->lines;
    } else {
      const GrayImage gt = to_gray(target);
      const GrayImage gr = to_gray(reference);
      candidates = detect_and_match_points(gt, gr, cfg.detector);
      lines_t = detect_line_segments(gt, cfg.detector);
      lines_r = detect_line_segments(gr, cfg.detector);
    }
    out.detected_points = static_cast<int>(candidates.size());
    const HomographyFit fit = estimate_homography_ransac(candidates, cfg.ransac);
    out.h0 = fit.h;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (fit.inliers[i]) out.points.push_back(candidates[i]);
    }
    out.inlier_points = fit.inlier_count;
    return 0;
  });

  in_stage("line-ops", [&] {
    if (matches) {
      out.lines = connect_line_matches(raw_lines, cfg.connection);
      out.target_lines = target_side(out.lines);
    } else {
      std::vector<LineSegment> merged_t, merged_r;
      if (!lines_t.empty()) merged_t = connect_segments(lines_t, cfg.connection).merged;
      if (!lines_r.empty()) merged_r = connect_segments(lines_r, cfg.connection).merged;
      out.lines = match_lines(merged_t, merged_r, out.h0);
      out.target_lines = merged_t;
    }
    const std::vector<PointMatch> extended =
        filter_extended(extend_point_matches(out.lines, tb, rb, cfg.extension), out.h0,
                        cfg.ransac.inlier_threshold);
    const std::size_t before = out.points.size();
    std::vector<PointMatch> all = out.points;
    all.insert(all.end(), extended.begin(), extended.end());
    out.points = dedup_points(all, cfg.extension.dedup_radius);
    out.extended_points = static_cast<int>(out.points.size() - std::min(before, out.points.size()));
    return 0;
  });
  return out;
}

MatchSet evaluation_matches(const FeatureStage& features) { return {features.points, features.lines}; }

StitchResult stitch(const Image& target, const Image& reference, const RunConfig& cfg,
                    const StitchOptions& options) {
  validate(cfg);
  if (target.empty() || reference.empty()) {
    throw StitchError(ErrorCode::kInvalidArgument, "input image is empty", "feature-pipeline");
  }
  StitchResult result;
  result.features = build_features(target, reference, cfg, options.matches);
  const FeatureStage& f = result.features;

  const MeshGrid mesh = in_stage("energy", [&] { return build_mesh(target.width, target.height, cfg.grid_size); });

  const std::vector<SampledLine> constraint_lines = in_stage("plane-construct", [&] {
    const std::vector<PlaneStar> stars = build_plane_stars(f.points, f.lines, cfg.plane);
    result.stars = static_cast<int>(stars.size());
    return collect_constraint_lines(stars, target_side(f.lines), mesh, cfg.plane.sample_spacing);
  });
  result.constraint_lines = static_cast<int>(constraint_lines.size());

  const EnergyAssembly assembly = in_stage("energy", [&] {
    result.prewarp = map_vertices(mesh, f.h0);
    const NormalMap normals = cfg.prewarp_normals ? NormalMap(f.h0) : std::nullopt;
    const std::vector<bool> overlap = overlap_mask(mesh, result.prewarp, bounds_of(reference));
    const LineClasses classes =
        classify_lines(f.target_lines, target_side(f.lines), mesh, overlap, cfg.global_line_ratio);
    std::vector<SampledLine> local, global;
    for (const LineSegment& s : classes.local) local.push_back(sample_line(s, cfg.plane.sample_spacing, mesh));
    for (const LineSegment& s : classes.global) global.push_back(sample_line(s, cfg.plane.sample_spacing, mesh));

    const int n = mesh.unknowns();
    DistortionBlocks distortion = build_distortion(mesh, result.prewarp, overlap);
    LinePreservationBlocks preservation = build_line_preservation(local, global, n, normals);
    std::vector<LinearResidualBlock> blocks;
    blocks.push_back(build_planar_distance(constraint_lines, n));
    blocks.push_back(build_planar_angle(constraint_lines, n, normals));
    blocks.push_back(build_point_alignment(f.points, mesh));
    blocks.push_back(build_line_alignment(f.lines, mesh, cfg.plane.sample_spacing));
    blocks.push_back(std::move(distortion.gh));
    blocks.push_back(std::move(distortion.ov));
    blocks.push_back(std::move(distortion.nv));
    blocks.push_back(std::move(preservation.ll));
    blocks.push_back(std::move(preservation.gl));
    EnergyAssembly a = assemble(blocks, cfg.weights, mesh, result.prewarp);
    if (options.dump_system) write_system(*options.dump_system, a);
    result.solve = solve(a, cfg.solver);
    return a;
  });
  result.warp = MeshWarp{mesh, result.solve.vertices};
  for (const LinearResidualBlock& b : assembly.blocks) {
    result.term_energy.emplace_back(b.term(), b.energy(result.warp.vertices));
  }

  if (options.render) {
    in_stage("compositor", [&] {
      result.canvas = compute_canvas(reference.width, reference.height, result.warp.vertices);
      WarpResult warped = warp_image(target, mesh, result.warp.vertices, result.canvas);
      result.folded_cells = warped.folded_cells;
      result.panorama = blend(warped.layer, place_reference(reference, result.canvas));
      return 0;
    });
  }

  result.report = in_stage("metrics", [&] {
    return evaluate(evaluation_matches(f), result.warp, cfg.plane, !cfg.d_dir_raw);
  });
  return result;
}

std::string run_summary_json(const StitchResult& r) {
  json j;
  std::vector<double> h;
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) h.push_back(r.features.h0(row, col));
  j["prewarp_homography"] = h;
  j["point_matches"] = {{"detected", r.features.detected_points},
                        {"inliers", r.features.inlier_points},
                        {"extended", r.features.extended_points},
                        {"used", r.features.points.size()}};
  j["line_matches"] = r.features.lines.size();
  j["plane_stars"] = r.stars;
  j["constraint_lines"] = r.constraint_lines;
  json energy = json::object();
  for (const auto& [term, value] : r.term_energy) energy[std::string(term_name(term))] = value;
  j["term_energy"] = energy;
  j["solver"] = {{"iterative", r.solve.iterative},
                 {"iterations", r.solve.iterations},
                 {"relative_gradient", r.solve.relative_gradient}};
  j["canvas"] = {{"width", r.canvas.width},
                 {"height", r.canvas.height},
                 {"offset", {r.canvas.offset.x(), r.canvas.offset.y()}}};
  j["folded_cells"] = r.folded_cells;
  return j.dump();
}

std::string features_json(const Image& target, const std::optional<Image>& reference,
                          const std::optional<MatchSet>& matches, const RunConfig& cfg) {
  json j;
  if (!reference) {
    const std::vector<LineSegment> segments =
        in_stage("feature-pipeline", [&] { return detect_line_segments(to_gray(target), cfg.detector); });
    json segs = json::array();
    for (const LineSegment& s : segments) segs.push_back(segment_json(s));
    j["segments"] = segs;
    j["groups"] = segments.empty() ? json::array()
                                   : in_stage("line-ops", [&] { return groups_json(connect_segments(segments, cfg.connection)); });
    return j.dump(2) + "\n";
  }

  const FeatureStage f = build_features(target, *reference, cfg, matches);
  std::vector<double> h;
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) h.push_back(f.h0(row, col));
  j["prewarp_homography"] = h;
  json segs = json::array();
  for (const LineSegment& s : f.target_lines) segs.push_back(segment_json(s));
  j["segments"] = segs;
  json lines = json::array();
  for (const LineMatch& m : f.lines) lines.push_back({{"l", segment_json(m.l)}, {"l_ref", segment_json(m.l_ref)}});
  j["line_matches"] = lines;
  json points = json::array();
  json extended = json::array();
  for (const PointMatch& m : f.points) {
    (m.origin == MatchOrigin::kExtended ? extended : points).push_back(point_match_json(m));
  }
  j["points"] = points;
  j["extended"] = extended;
  j["stars"] = in_stage("plane-construct", [&] { return stars_json(build_plane_stars(f.points, f.lines, cfg.plane)); });
  return j.dump(2) + "\n";
}

}  // namespace pstitch
