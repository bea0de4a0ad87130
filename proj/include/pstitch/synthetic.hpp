#pragma once

#include <cstdint>
#include <vector>

#include "pstitch/features.hpp"
#include "pstitch/geometry.hpp"
#include "pstitch/image.hpp"

namespace pstitch {

/// A textured plane seen twice: the target renders the texture directly and
/// the reference renders it through h, so target point p appears at h(p).
struct SyntheticScene {
  Image target;
  Image reference;
  Homography h;
  MatchSet matches;  // exact: q = h(p), l_ref = h(l)
  std::uint64_t seed = 0;
};

struct PlaneSceneOptions {
  int tile = 32;
  int bars = 4;
  /// Matches are kept this far inside both image borders.
  double margin = 8.0;
  /// Supersampling factor per axis.
  int supersample = 3;
};

/// Throws invalid-argument when h sends an image corner to infinity or
/// behind the camera.
SyntheticScene gen_plane_scene(std::uint64_t seed, int width, int height, const Homography& h,
                               const PlaneSceneOptions& options = {});

/// Intensity of the procedural plane texture at a target-frame point.
double plane_texture(std::uint64_t seed, const Point2& p, const PlaneSceneOptions& options = {});

/// Translation of 40-80 px to one side, a small vertical shift, a scale
/// within 3%, a rotation within half a degree and perspective terms up to 2e-5.
Homography random_moderate_homography(std::uint64_t seed);

struct BrokenLineOptions {
  int fragments_per_line = 3;
  double min_fragment_length = 30.0;
  double max_fragment_length = 90.0;
  /// Second family rotated by 90 degrees.
  bool perpendicular_families = false;
  /// Perpendicular spacing between neighbouring lines of one family.
  double line_spacing = 40.0;
};

struct BrokenLineSet {
  std::vector<LineSegment> segments;  // shuffled
  std::vector<int> line_of;           // source line of each segment
  std::vector<int> family_of;         // 0, or 1 for the perpendicular family
  int line_count = 0;
};

/// Straight lines cut into fragments separated by exactly `gap` pixels.
BrokenLineSet gen_broken_line_set(std::uint64_t seed, int n_lines, double gap,
                                  const BrokenLineOptions& options = {});

}  // namespace pstitch
