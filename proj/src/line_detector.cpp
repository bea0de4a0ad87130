#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "pstitch/features.hpp"

namespace pstitch {
namespace {

constexpr int kMinRegionPixels = 5;

// Signed angular difference folded into [0, pi] for oriented angles.
double oriented_angle_diff(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2 * std::numbers::pi);
  return d > std::numbers::pi ? 2 * std::numbers::pi - d : d;
}

}  // namespace

std::vector<LineSegment> detect_line_segments(const GrayImage& image, const DetectorConfig& cfg) {
  const int h = static_cast<int>(image.rows());
  const int w = static_cast<int>(image.cols());
  if (h < 2 || w < 2) return {};

  // 2x2 gradient, sampled at pixel-corner positions (x + 0.5, y + 0.5).
  const int gh = h - 1;
  const int gw = w - 1;
  GrayImage magnitude(gh, gw);
  GrayImage orientation(gh, gw);
  for (int y = 0; y < gh; ++y) {
    for (int x = 0; x < gw; ++x) {
      const float a = image(y, x), b = image(y, x + 1), c = image(y + 1, x), d = image(y + 1, x + 1);
      const float gx = 0.5f * ((b + d) - (a + c));
      const float gy = 0.5f * ((c + d) - (a + b));
      magnitude(y, x) = std::sqrt(gx * gx + gy * gy);
      orientation(y, x) = std::atan2(gy, gx);
    }
  }

  std::vector<int> seeds;
  for (int i = 0; i < gh * gw; ++i) {
    if (magnitude.data()[i] > cfg.line_grad_threshold) seeds.push_back(i);
  }
  std::stable_sort(seeds.begin(), seeds.end(),
                   [&](int a, int b) { return magnitude.data()[a] > magnitude.data()[b]; });

  const double tol = cfg.angle_tolerance_deg * std::numbers::pi / 180.0;
  std::vector<std::uint8_t> used(static_cast<std::size_t>(gh) * gw, 0);
  std::vector<LineSegment> segments;
  std::vector<int> region;

  for (const int seed : seeds) {
    if (used[seed]) continue;
    region.assign(1, seed);
    used[seed] = 1;
    double sum_cos = std::cos(orientation.data()[seed]);
    double sum_sin = std::sin(orientation.data()[seed]);
    double region_angle = orientation.data()[seed];
    for (std::size_t head = 0; head < region.size(); ++head) {
      const int px = region[head] % gw;
      const int py = region[head] / gw;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = px + dx;
          const int ny = py + dy;
          if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= gw || ny >= gh) continue;
          const int n = ny * gw + nx;
          if (used[n] || magnitude.data()[n] <= cfg.line_grad_threshold) continue;
          if (oriented_angle_diff(orientation.data()[n], region_angle) >= tol) continue;
          used[n] = 1;
          region.push_back(n);
          sum_cos += std::cos(orientation.data()[n]);
          sum_sin += std::sin(orientation.data()[n]);
          region_angle = std::atan2(sum_sin, sum_cos);
        }
      }
    }
    if (static_cast<int>(region.size()) < kMinRegionPixels) continue;

    // magnitude-weighted principal axis of the support region
    double wsum = 0;
    Point2 centroid = Point2::Zero();
    for (const int i : region) {
      const double m = magnitude.data()[i];
      centroid += m * Point2(i % gw + 0.5, i / gw + 0.5);
      wsum += m;
    }
    centroid /= wsum;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const int i : region) {
      const Point2 d = Point2(i % gw + 0.5, i / gw + 0.5) - centroid;
      cov += magnitude.data()[i] * d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    Point2 axis = eig.eigenvectors().col(1);

    // level-line direction: gradient rotated by -90 degrees
    const Point2 level_line(std::sin(region_angle), -std::cos(region_angle));
    if (angle_distance(direction_angle<double>(axis), direction_angle<double>(level_line)) >= tol) {
      continue;
    }
    if (axis.dot(level_line) < 0) axis = -axis;

    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -std::numeric_limits<double>::infinity();
    for (const int i : region) {
      const double t = (Point2(i % gw + 0.5, i / gw + 0.5) - centroid).dot(axis);
      t_min = std::min(t_min, t);
      t_max = std::max(t_max, t);
    }
    const LineSegment seg(centroid + t_min * axis, centroid + t_max * axis);
    if (seg.length() < cfg.min_line_length) continue;
    segments.push_back(seg);
  }

  std::stable_sort(segments.begin(), segments.end(),
                   [](const LineSegment& a, const LineSegment& b) { return a.length() > b.length(); });
  if (cfg.max_lines > 0 && static_cast<int>(segments.size()) > cfg.max_lines) {
    segments.resize(cfg.max_lines);
  }
  return segments;
}

std::vector<LineMatch> match_lines(const std::vector<LineSegment>& target,
                                   const std::vector<LineSegment>& reference, const Homography& h0,
                                   const LineMatchGates& gates) {
  const double max_angle = gates.max_angle_deg * std::numbers::pi / 180.0;
  std::vector<LineMatch> out;
  for (const LineSegment& l : target) {
    LineSegment mapped;
    try {
      mapped = apply_homography(h0, l);
    } catch (const StitchError&) {
      continue;
    }
    if (!(mapped.length() > 0)) continue;
    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    double best_mid = std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(reference.size()); ++j) {
      const LineSegment& r = reference[j];
      if (!(r.length() > 0)) continue;
      if (angle_distance(mapped.angle(), r.angle()) >= max_angle) continue;
      const double d1 = r.line_distance(mapped.start);
      const double d2 = r.line_distance(mapped.end);
      if (d1 > gates.max_endpoint_distance || d2 > gates.max_endpoint_distance) continue;
      const double cost = d1 + d2;
      const double mid = (r.midpoint() - mapped.midpoint()).norm();
      // collinear candidates tie on cost; prefer the one overlapping the mapped segment
      if (cost < best_cost - 1e-9 || (std::abs(cost - best_cost) <= 1e-9 && mid < best_mid)) {
        best = j;
        best_cost = cost;
        best_mid = mid;
      }
    }
    if (best >= 0) out.push_back({l, reference[best]});
  }
  return out;
}

}  // namespace pstitch
