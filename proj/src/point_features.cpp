#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <unordered_map>

#include "pstitch/features.hpp"

namespace pstitch {
namespace {

// Descriptor: kGrid x kGrid samples, kStep pixels apart, of a smoothed level.
constexpr int kGrid = 8;
constexpr double kStep = 5.0;
constexpr int kPatchRadius = 18;
constexpr int kScoreRadius = 2;
constexpr int kBorder = kPatchRadius + kScoreRadius + 2;
constexpr float kAmbiguousPeakRatio = 0.7f;

using Descriptor = Eigen::Matrix<float, kGrid * kGrid, 1>;

struct Keypoint {
  int level = 0;
  double score = 0;
  Point2 position = Point2::Zero();  // level-0 coordinates
  Descriptor descriptor;
};

GrayImage blur_binomial(const GrayImage& src) {
  const Eigen::Index h = src.rows();
  const Eigen::Index w = src.cols();
  GrayImage tmp(h, w);
  GrayImage out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const Eigen::Index xl = std::max<Eigen::Index>(x - 1, 0);
      const Eigen::Index xr = std::min<Eigen::Index>(x + 1, w - 1);
      tmp(y, x) = 0.25f * src(y, xl) + 0.5f * src(y, x) + 0.25f * src(y, xr);
    }
  }
  for (Eigen::Index y = 0; y < h; ++y) {
    const Eigen::Index yu = std::max<Eigen::Index>(y - 1, 0);
    const Eigen::Index yd = std::min<Eigen::Index>(y + 1, h - 1);
    out.row(y) = 0.25f * tmp.row(yu) + 0.5f * tmp.row(y) + 0.25f * tmp.row(yd);
  }
  return out;
}

std::vector<GrayImage> build_pyramid(const GrayImage& image, const DetectorConfig& cfg) {
  std::vector<GrayImage> levels{image};
  double factor = 1.0;
  for (int k = 1; k < cfg.pyramid_levels; ++k) {
    factor *= cfg.pyramid_scale;
    const auto w = static_cast<Eigen::Index>(std::floor(image.cols() / factor));
    const auto h = static_cast<Eigen::Index>(std::floor(image.rows() / factor));
    if (w < 4 * kBorder || h < 4 * kBorder) break;
    const GrayImage smooth = blur_binomial(blur_binomial(levels.back()));
    GrayImage next(h, w);
    for (Eigen::Index y = 0; y < h; ++y)
      for (Eigen::Index x = 0; x < w; ++x)
        next(y, x) = sample_bilinear(smooth, x * cfg.pyramid_scale, y * cfg.pyramid_scale);
    levels.push_back(std::move(next));
  }
  return levels;
}

// Minimum eigenvalue of the structure tensor over a (2r+1)^2 window.
GrayImage corner_response(const GrayImage& img) {
  const Eigen::Index h = img.rows();
  const Eigen::Index w = img.cols();
  GrayImage ixx = GrayImage::Zero(h, w);
  GrayImage iyy = GrayImage::Zero(h, w);
  GrayImage ixy = GrayImage::Zero(h, w);
  for (Eigen::Index y = 1; y + 1 < h; ++y) {
    for (Eigen::Index x = 1; x + 1 < w; ++x) {
      const float gx = 0.5f * (img(y, x + 1) - img(y, x - 1));
      const float gy = 0.5f * (img(y + 1, x) - img(y - 1, x));
      ixx(y, x) = gx * gx;
      iyy(y, x) = gy * gy;
      ixy(y, x) = gx * gy;
    }
  }
  GrayImage response = GrayImage::Zero(h, w);
  const int r = kScoreRadius;
  for (Eigen::Index y = r + 1; y + r + 1 < h; ++y) {
    for (Eigen::Index x = r + 1; x + r + 1 < w; ++x) {
      const double a = ixx.block(y - r, x - r, 2 * r + 1, 2 * r + 1).sum();
      const double b = ixy.block(y - r, x - r, 2 * r + 1, 2 * r + 1).sum();
      const double c = iyy.block(y - r, x - r, 2 * r + 1, 2 * r + 1).sum();
      const double half_trace = 0.5 * (a + c);
      const double disc = std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b * b));
      response(y, x) = static_cast<float>(half_trace - disc);
    }
  }
  return response;
}

// Parabolic peak offset in [-0.5, 0.5] from three samples around a maximum.
double parabolic_offset(double left, double center, double right) {
  const double denom = left - 2 * center + right;
  if (std::abs(denom) < 1e-12) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

struct Peak {
  Point2 position;
  float score;
};

// Local maxima of a response map over a 5x5 window, strict on earlier raster
// positions so plateaus keep one pixel.
std::vector<Peak> response_peaks(const GrayImage& response, int border) {
  std::vector<Peak> peaks;
  const double max_response = response.maxCoeff();
  if (!(max_response > 1.0)) return peaks;
  const double threshold = std::max(1.0, 0.01 * max_response);
  for (int y = border; y + border < response.rows(); ++y) {
    for (int x = border; x + border < response.cols(); ++x) {
      const float s = response(y, x);
      if (s <= threshold) continue;
      bool is_max = true;
      for (int dy = -2; dy <= 2 && is_max; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const float other = response(y + dy, x + dx);
          if (other > s || (other == s && (dy < 0 || (dy == 0 && dx < 0)))) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;
      const double ox = parabolic_offset(response(y, x - 1), s, response(y, x + 1));
      const double oy = parabolic_offset(response(y - 1, x), s, response(y + 1, x));
      peaks.push_back({Point2(x + ox, y + oy), s});
    }
  }
  return peaks;
}

// A coarse-level corner is relocated to the strongest full-resolution peak
// within two level steps of its upscaled position. A runner-up of comparable
// strength makes the location ambiguous and the corner is dropped.
std::optional<Point2> refine_at_base(const std::vector<Peak>& base, const Point2& p, double factor) {
  const double radius = 2 * factor;
  const Peak* best = nullptr;
  float second = 0;
  for (const Peak& q : base) {
    if ((q.position - p).squaredNorm() > radius * radius) continue;
    if (!best || q.score > best->score) {
      if (best) second = std::max(second, best->score);
      best = &q;
    } else {
      second = std::max(second, q.score);
    }
  }
  if (!best || second >= kAmbiguousPeakRatio * best->score) return std::nullopt;
  return best->position;
}

bool make_descriptor(const GrayImage& smooth, double x, double y, Descriptor& out) {
  const double half = 0.5 * (kGrid - 1) * kStep;
  int k = 0;
  for (int gy = 0; gy < kGrid; ++gy)
    for (int gx = 0; gx < kGrid; ++gx)
      out[k++] = sample_bilinear(smooth, x - half + gx * kStep, y - half + gy * kStep);
  out.array() -= out.mean();
  const float norm = out.norm();
  if (norm < 1e-3f) return false;
  out /= norm;
  return true;
}

std::vector<Keypoint> detect_keypoints(const GrayImage& image, const DetectorConfig& cfg) {
  const std::vector<GrayImage> pyramid = build_pyramid(image, cfg);
  std::vector<Keypoint> all;
  std::vector<Peak> base;
  double factor = 1.0;
  for (int level = 0; level < static_cast<int>(pyramid.size()); ++level) {
    if (level > 0) factor *= cfg.pyramid_scale;
    const GrayImage& img = pyramid[level];
    const GrayImage smooth = blur_binomial(blur_binomial(img));
    const std::vector<Peak> peaks = response_peaks(corner_response(img), level == 0 ? kScoreRadius + 2 : kBorder);
    if (level == 0) base = peaks;
    for (const Peak& peak : peaks) {
      Keypoint kp;
      kp.level = level;
      kp.score = peak.score;
      if (level == 0) {
        kp.position = peak.position;
      } else {
        const auto refined = refine_at_base(base, peak.position * factor, factor);
        if (!refined) continue;
        kp.position = *refined;
      }
      // described at the refined location so both images sample the same spot
      const Point2 at = kp.position / factor;
      if (at.x() < kPatchRadius || at.y() < kPatchRadius || at.x() > img.cols() - 1 - kPatchRadius ||
          at.y() > img.rows() - 1 - kPatchRadius) {
        continue;
      }
      if (!make_descriptor(smooth, at.x(), at.y(), kp.descriptor)) continue;
      all.push_back(std::move(kp));
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Keypoint& a, const Keypoint& b) { return a.score > b.score; });
  if (static_cast<int>(all.size()) > cfg.max_points) all.resize(cfg.max_points);
  return all;
}

struct Nearest {
  int best = -1;
  double d1 = std::numeric_limits<double>::infinity();
  double d2 = std::numeric_limits<double>::infinity();
};

Nearest nearest(const Keypoint& query, const std::vector<Keypoint>& pool) {
  Nearest n;
  for (int j = 0; j < static_cast<int>(pool.size()); ++j) {
    if (std::abs(pool[j].level - query.level) > 1) continue;
    const double d = (query.descriptor - pool[j].descriptor).norm();
    if (d < n.d1) {
      n.d2 = n.d1;
      n.d1 = d;
      n.best = j;
    } else if (d < n.d2) {
      n.d2 = d;
    }
  }
  return n;
}

}  // namespace

std::vector<PointMatch> dedup_points(const std::vector<PointMatch>& matches, double radius) {
  // spatial hash on the target point; cells are one radius wide
  const double cell = radius > 0 ? radius : 1.0;
  auto key = [](long long cx, long long cy) { return (cx << 32) ^ (cy & 0xffffffffLL); };
  std::unordered_map<long long, std::vector<int>> buckets;
  std::vector<PointMatch> out;
  out.reserve(matches.size());
  for (const PointMatch& m : matches) {
    const auto cx = static_cast<long long>(std::floor(m.p.x() / cell));
    const auto cy = static_cast<long long>(std::floor(m.p.y() / cell));
    bool dup = false;
    for (long long dx = -1; dx <= 1 && !dup; ++dx) {
      for (long long dy = -1; dy <= 1 && !dup; ++dy) {
        const auto it = buckets.find(key(cx + dx, cy + dy));
        if (it == buckets.end()) continue;
        for (const int k : it->second) {
          if ((out[k].p - m.p).norm() <= radius && (out[k].q - m.q).norm() <= radius) {
            dup = true;
            break;
          }
        }
      }
    }
    if (dup) continue;
    buckets[key(cx, cy)].push_back(static_cast<int>(out.size()));
    out.push_back(m);
  }
  return out;
}

std::vector<PointMatch> detect_and_match_points(const GrayImage& target, const GrayImage& reference,
                                                const DetectorConfig& cfg) {
  if (!(cfg.pyramid_scale > 1.0)) {
    throw StitchError(ErrorCode::kInvalidArgument, "pyramid scale must exceed 1");
  }
  const std::vector<Keypoint> a = detect_keypoints(target, cfg);
  const std::vector<Keypoint> b = detect_keypoints(reference, cfg);

  std::vector<PointMatch> matches;
  for (int i = 0; i < static_cast<int>(a.size()); ++i) {
    const Nearest fwd = nearest(a[i], b);
    if (fwd.best < 0 || !(fwd.d1 < cfg.ratio_test * fwd.d2)) continue;
    const Nearest back = nearest(b[fwd.best], a);
    if (back.best != i) continue;
    matches.push_back({a[i].position, b[fwd.best].position, MatchOrigin::kDetected});
  }
  matches = dedup_points(matches);
  if (matches.size() < 4) {
    throw StitchError(ErrorCode::kInsufficientFeatures,
                      "only " + std::to_string(matches.size()) + " point matches found");
  }
  return matches;
}

}  // namespace pstitch
