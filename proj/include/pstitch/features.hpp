#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "pstitch/geometry.hpp"
#include "pstitch/image.hpp"

namespace pstitch {

enum class MatchOrigin { kDetected, kExtended };

/// p lives in the target image, q in the reference image.
struct PointMatch {
  Point2 p = Point2::Zero();
  Point2 q = Point2::Zero();
  MatchOrigin origin = MatchOrigin::kDetected;
};

struct LineMatch {
  LineSegment l;      // target
  LineSegment l_ref;  // reference
};

struct MatchSet {
  std::vector<PointMatch> points;
  std::vector<LineMatch> lines;
};

struct DetectorConfig {
  double pyramid_scale = 1.5;
  int pyramid_levels = 4;
  int max_points = 800;
  /// Minimum gradient magnitude (intensity levels per pixel) for line support.
  double line_grad_threshold = 8.0;
  /// Keep at most this many of the longest detected segments.
  int max_lines = 200;
  double min_line_length = 10.0;
  double angle_tolerance_deg = 22.5;
  double ratio_test = 0.8;
};

struct ImageBounds {
  double width = 0;
  double height = 0;

  bool contains(const Point2& p, double pad = 0.0) const {
    return p.allFinite() && p.x() >= -pad && p.y() >= -pad && p.x() <= width + pad &&
           p.y() <= height + pad;
  }
};

/// Drops point matches whose target and reference points both lie within
/// radius of an earlier match. Keeps first occurrences in order.
std::vector<PointMatch> dedup_points(const std::vector<PointMatch>& matches, double radius = 1.0);

// -- point features ---------------------------------------------------------

/// Corner detection on a scale pyramid, normalized-patch descriptors and
/// mutual nearest-neighbour matching with a ratio test.
/// Throws insufficient-features when fewer than 4 matches survive.
std::vector<PointMatch> detect_and_match_points(const GrayImage& target, const GrayImage& reference,
                                                const DetectorConfig& cfg = {});

// -- line features ----------------------------------------------------------

/// Gradient-orientation region growing followed by a least-squares segment
/// fit per region. Segments shorter than cfg.min_line_length are dropped.
std::vector<LineSegment> detect_line_segments(const GrayImage& image, const DetectorConfig& cfg = {});

struct LineMatchGates {
  double max_endpoint_distance = 3.0;
  double max_angle_deg = 5.0;
};

/// Pairs each target line with the reference line closest to its
/// h0-mapped endpoints, subject to the distance and direction gates.
std::vector<LineMatch> match_lines(const std::vector<LineSegment>& target,
                                   const std::vector<LineSegment>& reference, const Homography& h0,
                                   const LineMatchGates& gates = {});

// -- homography -------------------------------------------------------------

struct RansacParams {
  double inlier_threshold = 3.0;
  double confidence = 0.995;
  int max_iterations = 2000;
  std::uint64_t seed = 42;
};

struct HomographyFit {
  Homography h;
  std::vector<bool> inliers;
  int inlier_count = 0;
};

/// Normalized DLT fit through all matches (no outlier rejection).
Homography fit_homography_dlt(const std::vector<PointMatch>& matches);

/// RANSAC over 4-point normalized DLT samples, refit on all inliers.
/// Throws estimation-failure for fewer than 4 matches or degenerate data.
HomographyFit estimate_homography_ransac(const std::vector<PointMatch>& matches,
                                         const RansacParams& params = {});

inline Homography estimate_homography(const std::vector<PointMatch>& matches,
                                      const RansacParams& params = {}) {
  return estimate_homography_ransac(matches, params).h;
}

// -- ingestion --------------------------------------------------------------

/// Reads the matches JSON document
///   {"points": [[px,py,qx,qy], ...], "lines": [[lx1,ly1,lx2,ly2, rx1,ry1,rx2,ry2], ...]}
/// Coordinates are checked against the image bounds when given.
/// Throws ingestion-error naming the offending row.
MatchSet load_matches(const std::filesystem::path& path,
                      std::optional<ImageBounds> target = std::nullopt,
                      std::optional<ImageBounds> reference = std::nullopt);

MatchSet parse_matches(const std::string& text, std::optional<ImageBounds> target = std::nullopt,
                       std::optional<ImageBounds> reference = std::nullopt,
                       const std::string& source = "<memory>");

void save_matches(const std::filesystem::path& path, const MatchSet& matches);

}  // namespace pstitch
