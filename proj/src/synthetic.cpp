#include "pstitch/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace pstitch {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::int64_t a, std::int64_t b, std::uint64_t salt) {
  std::uint64_t h = splitmix64(seed ^ salt);
  h = splitmix64(h ^ static_cast<std::uint64_t>(a));
  return splitmix64(h ^ static_cast<std::uint64_t>(b));
}

// uniform in [lo, hi)
double unit_hash(std::uint64_t h, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(h >> 11) * 0x1.0p-53;
}

Image render(int width, int height, int supersample, const auto& texture_at) {
  Image img(width, height, 1);
  const int s = std::max(1, supersample);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0;
      for (int sy = 0; sy < s; ++sy) {
        for (int sx = 0; sx < s; ++sx) {
          const Point2 p(x + (sx + 0.5) / s - 0.5, y + (sy + 0.5) / s - 0.5);
          acc += texture_at(p);
        }
      }
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(acc / (s * s)), 0L, 255L));
    }
  }
  return img;
}

}  // namespace

double plane_texture(std::uint64_t seed, const Point2& p, const PlaneSceneOptions& options) {
  const double tile = options.tile;
  for (int k = 0; k < options.bars; ++k) {
    const double pos = std::floor(unit_hash(mix(seed, k, 0, 0xba5), 2 * tile, 18 * tile)) + 0.5 * tile;
    const double coord = k % 2 == 0 ? p.y() : p.x();
    if (std::abs(coord - pos) < 3.0) return k % 4 < 2 ? 12.0 : 243.0;
  }
  const auto i = static_cast<std::int64_t>(std::floor(p.x() / tile));
  const auto j = static_cast<std::int64_t>(std::floor(p.y() / tile));
  return std::floor(unit_hash(mix(seed, i, j, 0x711e), 40.0, 216.0));
}

SyntheticScene gen_plane_scene(std::uint64_t seed, int width, int height, const Homography& h,
                               const PlaneSceneOptions& options) {
  if (width <= 0 || height <= 0 || options.tile <= 0) {
    throw StitchError(ErrorCode::kInvalidArgument, "scene size and tile must be positive");
  }
  for (const Point2& corner : {Point2(0, 0), Point2(width, 0), Point2(0, height), Point2(width, height)}) {
    const double w = h.matrix().row(2).dot(corner.homogeneous());
    if (!(w > 1e-6) || !apply_homography(h, corner).allFinite()) {
      throw StitchError(ErrorCode::kInvalidArgument, "homography sends an image corner to infinity");
    }
  }
  const Homography inv = h.inverse();

  SyntheticScene scene;
  scene.seed = seed;
  scene.h = h;
  scene.target = render(width, height, options.supersample,
                        [&](const Point2& p) { return plane_texture(seed, p, options); });
  scene.reference = render(width, height, options.supersample, [&](const Point2& p) {
    return plane_texture(seed, apply_homography(inv, p), options);
  });

  const ImageBounds target{static_cast<double>(width - 1), static_cast<double>(height - 1)};
  auto inside = [&](const Point2& p) {
    return p.x() >= options.margin && p.y() >= options.margin && p.x() <= target.width - options.margin &&
           p.y() <= target.height - options.margin;
  };

  const int ni = width / options.tile;
  const int nj = height / options.tile;
  for (int j = 1; j <= nj; ++j) {
    for (int i = 1; i <= ni; ++i) {
      const Point2 p(i * options.tile, j * options.tile);
      if (!inside(p)) continue;
      const Point2 q = apply_homography(h, p);
      if (inside(q)) scene.matches.points.push_back({p, q, MatchOrigin::kDetected});
    }
  }

  constexpr int kSpan = 4;
  auto try_line = [&](const Point2& a, const Point2& b) {
    if (!inside(a) || !inside(b)) return;
    const LineSegment l(a, b);
    const LineSegment r = apply_homography(h, l);
    if (inside(r.start) && inside(r.end)) scene.matches.lines.push_back({l, r});
  };
  for (int j = 1; j <= nj; j += 2) {
    for (int i = 1; i + kSpan <= ni; i += kSpan) {
      try_line(Point2(i * options.tile, j * options.tile), Point2((i + kSpan) * options.tile, j * options.tile));
    }
  }
  for (int i = 1; i <= ni; i += 2) {
    for (int j = 1; j + kSpan <= nj; j += kSpan) {
      try_line(Point2(i * options.tile, j * options.tile), Point2(i * options.tile, (j + kSpan) * options.tile));
    }
  }
  return scene;
}

Homography random_moderate_homography(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double tx = (u(rng) < 0.5 ? -1.0 : 1.0) * (40.0 + 40.0 * u(rng));
  const double ty = -10.0 + 20.0 * u(rng);
  const double s = 0.97 + 0.06 * u(rng);
  const double theta = (-0.5 + u(rng)) * std::numbers::pi / 180.0;
  const double p1 = (-1.0 + 2.0 * u(rng)) * 2e-5;
  const double p2 = (-1.0 + 2.0 * u(rng)) * 2e-5;
  Eigen::Matrix3d m;
  m << s * std::cos(theta), -s * std::sin(theta), tx, s * std::sin(theta), s * std::cos(theta), ty, p1, p2, 1.0;
  return Homography(m);
}

BrokenLineSet gen_broken_line_set(std::uint64_t seed, int n_lines, double gap, const BrokenLineOptions& options) {
  if (n_lines < 0 || options.fragments_per_line < 1 || !(gap >= 0)) {
    throw StitchError(ErrorCode::kInvalidArgument, "invalid broken-line parameters");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double base_angle = std::numbers::pi * u(rng);
  const Point2 center(1000.0, 1000.0);

  BrokenLineSet out;
  out.line_count = n_lines;
  const int families = options.perpendicular_families ? 2 : 1;
  struct Item {
    LineSegment s;
    int line;
    int family;
  };
  std::vector<Item> items;
  for (int line = 0; line < n_lines; ++line) {
    const int family = line % families;
    const int slot = line / families;
    const int per_family = (n_lines - family + families - 1) / families;
    const double angle = base_angle + family * 0.5 * std::numbers::pi + (-0.01 + 0.02 * u(rng));
    const double family_angle = base_angle + family * 0.5 * std::numbers::pi;
    const Point2 dir(std::cos(angle), std::sin(angle));
    const Point2 across(-std::sin(family_angle), std::cos(family_angle));
    const Point2 along(std::cos(family_angle), std::sin(family_angle));
    const Point2 origin = center + across * options.line_spacing * (slot - 0.5 * (per_family - 1)) +
                          along * (-50.0 + 100.0 * u(rng));
    double t = 0;
    for (int f = 0; f < options.fragments_per_line; ++f) {
      const double len = options.min_fragment_length +
                         (options.max_fragment_length - options.min_fragment_length) * u(rng);
      items.push_back({LineSegment(origin + t * dir, origin + (t + len) * dir), line, family});
      t += len + gap;
    }
  }
  std::shuffle(items.begin(), items.end(), rng);
  for (Item& it : items) {
    if (u(rng) < 0.5) it.s = it.s.reversed();
    out.segments.push_back(it.s);
    out.line_of.push_back(it.line);
    out.family_of.push_back(it.family);
  }
  return out;
}

}  // namespace pstitch
