#pragma once

#include <vector>

#include "pstitch/features.hpp"
#include "pstitch/geometry.hpp"

namespace pstitch {

/// A feature point P joined to both endpoints of a feature line AB; the legs
/// PA and PB are indirect lines that pin the plane P-A-B.
struct PlaneStar {
  Point2 apex = Point2::Zero();
  LineSegment base;
  std::array<LineSegment, 2> legs;
  int point_index = -1;
  int line_index = -1;
};

struct PlanePolicy {
  int max_stars_per_point = 3;
  double min_leg_length = 40.0;
  double sample_spacing = 40.0;
  /// Apex must be at least this far from the base's infinite line.
  double min_apex_distance = 2.0;
};

enum class StarCandidateStatus { kAccepted, kCollinear, kShortLeg };

struct StarCandidate {
  int line_index = -1;
  double distance = 0;
  StarCandidateStatus status = StarCandidateStatus::kAccepted;
};

/// Lines examined for one apex in nearest-first order (distance to the
/// segment, ties by index), stopping once max_stars_per_point are accepted.
std::vector<StarCandidate> walk_star_candidates(const Point2& apex, const std::vector<LineSegment>& lines,
                                                const PlanePolicy& policy);

std::vector<PlaneStar> build_plane_stars(const std::vector<Point2>& points,
                                         const std::vector<LineSegment>& lines, const PlanePolicy& policy);

/// Uses the target-image side of each match.
std::vector<PlaneStar> build_plane_stars(const std::vector<PointMatch>& points,
                                         const std::vector<LineMatch>& lines, const PlanePolicy& policy);

/// A line cut into M >= 3 equally spaced samples, each anchored in the mesh.
struct SampledLine {
  LineSegment source;
  std::vector<Point2> samples;
  Point2 normal = Point2::Zero();
  std::vector<BilinearAnchor> anchors;

  int size() const { return static_cast<int>(samples.size()); }
};

/// M = max(3, ceil(len / spacing) + 1). Throws out-of-bounds when the segment
/// leaves the mesh.
SampledLine sample_line(const LineSegment& seg, double spacing, const MeshGrid& mesh);

/// Legs and bases of every star plus the given feature lines, sampled and
/// deduplicated (same endpoints within 1 px). Lines outside the mesh are skipped.
std::vector<SampledLine> collect_constraint_lines(const std::vector<PlaneStar>& stars,
                                                  const std::vector<LineSegment>& feature_lines,
                                                  const MeshGrid& mesh, double spacing);

/// Keeps the first occurrence of segments sharing endpoints within tol.
std::vector<LineSegment> dedup_segments(const std::vector<LineSegment>& segments, double tol = 1.0);

}  // namespace pstitch
