#pragma once

#include <vector>

#include "pstitch/features.hpp"
#include "pstitch/geometry.hpp"
#include "pstitch/plane.hpp"

namespace pstitch {

/// Legs from a feature point to both endpoints of a feature line, before
/// (l1, l2) and after (l1_hat, l2_hat) warping.
struct IndirectPair {
  LineSegment l1;
  LineSegment l2;
  LineSegment l1_hat;
  LineSegment l2_hat;
  int point_index = -1;
  int line_index = -1;
};

struct IndirectPairSet {
  std::vector<IndirectPair> pairs;
  /// Point on the line, or a leg that collapses under the warp.
  int excluded_degenerate = 0;
};

/// Pairs chosen by the same nearest-line walk that builds plane stars.
IndirectPairSet build_indirect_pairs(const std::vector<Point2>& points, const std::vector<LineSegment>& lines,
                                     const MeshWarp& warp, const PlanePolicy& policy);

/// Root-mean-square change of the leg length ratio |l1| / |l2|.
double d_dis(const std::vector<IndirectPair>& pairs);

/// Root-mean-square change of the squared enclosed-angle sine. With
/// normalize = false the raw cross products of the legs are compared.
double d_dir(const std::vector<IndirectPair>& pairs, bool normalize = true);

/// sqrt(mean ||warp(p) - q||^2) over matches whose p lies on the mesh.
/// Throws undefined-metric when no match qualifies.
double rmse(const std::vector<PointMatch>& matches, const MeshWarp& warp);

struct MetricReport {
  double rmse = 0;
  double d_dis = 0;
  double d_dir = 0;
  int k = 0;
  int excluded_degenerate = 0;
  bool d_dir_normalized = true;
  std::vector<IndirectPair> per_pair;
};

/// RMSE over every point match; D_dis and D_dir over the matched points and
/// lines (target side). Metrics without any pair are reported as 0.
MetricReport evaluate(const MatchSet& matches, const MeshWarp& warp, const PlanePolicy& policy,
                      bool d_dir_normalized = true);

}  // namespace pstitch
