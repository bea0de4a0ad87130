#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "pstitch/compositor.hpp"
#include "pstitch/config.hpp"
#include "pstitch/energy.hpp"
#include "pstitch/metrics.hpp"

namespace pstitch {

/// Matched features after filtering, extension and line connection.
struct FeatureStage {
  Homography h0;
  std::vector<PointMatch> points;  // RANSAC inliers plus accepted extended matches
  int detected_points = 0;
  int inlier_points = 0;
  int extended_points = 0;
  std::vector<LineMatch> lines;           // connected line matches
  std::vector<LineSegment> target_lines;  // connected target lines (matched or not)
};

struct StitchResult {
  FeatureStage features;
  MeshWarp warp;
  MeshVertexVector prewarp;
  SolveResult solve;
  std::vector<std::pair<Term, double>> term_energy;  // unweighted, at the solution
  int stars = 0;
  int constraint_lines = 0;
  Canvas canvas;
  Layer panorama;
  int folded_cells = 0;
  MetricReport report;
};

struct StitchOptions {
  std::optional<MatchSet> matches;
  std::optional<std::filesystem::path> dump_system;
  bool render = true;
};

/// Target-to-reference mesh warp and panorama. Stage failures are rethrown
/// with the stage name attached.
StitchResult stitch(const Image& target, const Image& reference, const RunConfig& cfg,
                    const StitchOptions& options = {});

FeatureStage build_features(const Image& target, const Image& reference, const RunConfig& cfg,
                            const std::optional<MatchSet>& matches);

/// Points and lines the metrics are evaluated on.
MatchSet evaluation_matches(const FeatureStage& features);

/// Run diagnostics appended to the stitch report.
std::string run_summary_json(const StitchResult& result);

/// Segments, groups, extended matches and stars of one image or a pair.
std::string features_json(const Image& target, const std::optional<Image>& reference,
                          const std::optional<MatchSet>& matches, const RunConfig& cfg);

}  // namespace pstitch
