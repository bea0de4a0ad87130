#pragma once

#include <vector>

#include "pstitch/features.hpp"
#include "pstitch/geometry.hpp"

namespace pstitch {

struct ConnectionParams {
  /// Maximum direction-angle difference in radians.
  double slope_tol = 0.05;
  /// Maximum endpoint gap in pixels.
  double dist_tol = 20.0;
};

/// Partition of an input segment list into collinear, adjacent groups.
struct LineGroupSet {
  std::vector<std::vector<int>> groups;  // indices into the input
  std::vector<int> group_of;             // per input segment
  std::vector<LineSegment> merged;       // one per group
};

/// Greedy first-fit grouping of segments that are close end-to-end and share
/// a direction, followed by group-merging passes until nothing changes.
LineGroupSet connect_segments(const std::vector<LineSegment>& segments, const ConnectionParams& params);

/// Total-least-squares line through all member endpoints, spanning the
/// extreme endpoint projections. A single segment is returned unchanged.
LineSegment merge_group(const std::vector<LineSegment>& group);

/// Merges line matches whose target segments connect, merging the target and
/// reference members of each group separately.
std::vector<LineMatch> connect_line_matches(const std::vector<LineMatch>& matches,
                                            const ConnectionParams& params);

struct ExtensionParams {
  /// Allowed distance outside the image bounds, typically one grid cell.
  double padding = 40.0;
  /// Pairs of lines closer than this in direction (degrees) are skipped.
  double min_angle_deg = 10.0;
  double dedup_radius = 1.0;
};

/// Intersects every well-conditioned pair of matched lines in both images and
/// emits the intersections as extended point matches.
std::vector<PointMatch> extend_point_matches(const std::vector<LineMatch>& line_matches,
                                             const ImageBounds& target, const ImageBounds& reference,
                                             const ExtensionParams& params = {});

/// Consensus test of extended matches against an estimated homography.
std::vector<PointMatch> filter_extended(const std::vector<PointMatch>& extended, const Homography& h0,
                                        double threshold = 3.0);

}  // namespace pstitch
