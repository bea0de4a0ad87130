#include "pstitch/compositor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pstitch {
namespace {

std::array<Point2, 4> cell_corners(const MeshGrid& mesh, const MeshVertexVector& v, int r, int c) {
  return {vertex_at(v, mesh.vertex_index(r, c)), vertex_at(v, mesh.vertex_index(r, c + 1)),
          vertex_at(v, mesh.vertex_index(r + 1, c)), vertex_at(v, mesh.vertex_index(r + 1, c + 1))};
}

std::array<Point2, 4> original_corners(const MeshGrid& mesh, int r, int c) {
  return {mesh.vertex(r, c), mesh.vertex(r, c + 1), mesh.vertex(r + 1, c), mesh.vertex(r + 1, c + 1)};
}

Point2 bilinear(const std::array<Point2, 4>& q, const Point2& uv) {
  const double u = uv.x();
  const double v = uv.y();
  return (1 - u) * (1 - v) * q[0] + u * (1 - v) * q[1] + (1 - u) * v * q[2] + u * v * q[3];
}

bool in_triangle(const Point2& p, const Point2& a, const Point2& b, const Point2& c) {
  const double d1 = cross2<double>(Point2(b - a), Point2(p - a));
  const double d2 = cross2<double>(Point2(c - b), Point2(p - b));
  const double d3 = cross2<double>(Point2(a - c), Point2(p - c));
  const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
  const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
  return !(has_neg && has_pos);
}

struct PixelRange {
  int x0, x1, y0, y1;
};

PixelRange pixel_range(const std::array<Point2, 4>& q, const Canvas& canvas) {
  double min_x = q[0].x(), max_x = q[0].x(), min_y = q[0].y(), max_y = q[0].y();
  for (const Point2& p : q) {
    min_x = std::min(min_x, p.x());
    max_x = std::max(max_x, p.x());
    min_y = std::min(min_y, p.y());
    max_y = std::max(max_y, p.y());
  }
  return {std::max(0, static_cast<int>(std::ceil(min_x - 1e-9))),
          std::min(canvas.width - 1, static_cast<int>(std::floor(max_x + 1e-9))),
          std::max(0, static_cast<int>(std::ceil(min_y - 1e-9))),
          std::min(canvas.height - 1, static_cast<int>(std::floor(max_y + 1e-9)))};
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Exact 1-D squared distance transform (lower envelope of parabolas).
void distance_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                 std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == inf) continue;
    if (f[v[k]] == inf) {
      v[k] = q;
      continue;
    }
    double s;
    while (true) {
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
      if (s <= z[k] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = f[v[k]] == inf ? inf : dq * dq + f[v[k]];
  }
}

}  // namespace

Canvas compute_canvas(int reference_width, int reference_height, const MeshVertexVector& vertices) {
  if (!vertices.allFinite()) throw StitchError(ErrorCode::kInvalidArgument, "mesh vertices are not finite");
  double min_x = 0, min_y = 0;
  double max_x = reference_width, max_y = reference_height;
  for (Eigen::Index i = 0; i + 1 < vertices.size(); i += 2) {
    min_x = std::min(min_x, vertices[i]);
    max_x = std::max(max_x, vertices[i]);
    min_y = std::min(min_y, vertices[i + 1]);
    max_y = std::max(max_y, vertices[i + 1]);
  }
  // round-off from the solver must not grow the canvas by a pixel
  const double lo_x = std::floor(min_x + 1e-6);
  const double lo_y = std::floor(min_y + 1e-6);
  const double hi_x = std::ceil(max_x - 1e-6);
  const double hi_y = std::ceil(max_y - 1e-6);
  Canvas canvas;
  canvas.width = static_cast<int>(hi_x - lo_x);
  canvas.height = static_cast<int>(hi_y - lo_y);
  canvas.offset = Point2(0.0 - lo_x, 0.0 - lo_y);
  return canvas;
}

bool quad_is_valid(const MeshGrid& mesh, const MeshVertexVector& vertices, int r, int c) {
  const auto q = cell_corners(mesh, vertices, r, c);
  const std::array<Point2, 4> ring = {q[0], q[1], q[3], q[2]};
  for (int i = 0; i < 4; ++i) {
    const Point2 e1 = ring[(i + 1) % 4] - ring[i];
    const Point2 e2 = ring[(i + 2) % 4] - ring[(i + 1) % 4];
    if (!(cross2<double>(e1, e2) > 0)) return false;
  }
  return true;
}

bool invert_bilinear(const std::array<Point2, 4>& quad, const Point2& p, Point2& uv, double tol) {
  Point2 x(0.5, 0.5);
  for (int iter = 0; iter < 50; ++iter) {
    const Point2 r = bilinear(quad, x) - p;
    const double u = x.x();
    const double v = x.y();
    Eigen::Matrix2d j;
    j.col(0) = (1 - v) * (quad[1] - quad[0]) + v * (quad[3] - quad[2]);
    j.col(1) = (1 - u) * (quad[2] - quad[0]) + u * (quad[3] - quad[1]);
    const double det = j.determinant();
    if (!(std::abs(det) > 1e-14)) return false;
    const Point2 step = j.inverse() * r;
    x -= step;
    if (step.norm() < 1e-12) break;
  }
  uv = x;
  return x.allFinite() && (bilinear(quad, x) - p).norm() <= tol;
}

WarpResult warp_image(const Image& target, const MeshGrid& mesh, const MeshVertexVector& vertices,
                      const Canvas& canvas) {
  if (vertices.size() != mesh.unknowns()) {
    throw StitchError(ErrorCode::kInvalidArgument, "vertex vector does not match the mesh");
  }
  const Image src = to_rgb(target);
  WarpResult out;
  out.layer.image = Image(canvas.width, canvas.height, 3);
  out.layer.mask = Mask::Zero(canvas.height, canvas.width);
  MeshVertexVector placed = vertices;
  for (Eigen::Index i = 0; i + 1 < placed.size(); i += 2) {
    placed[i] += canvas.offset.x();
    placed[i + 1] += canvas.offset.y();
  }

  auto shade = [&](int x, int y, const std::array<Point2, 4>& original, const Point2& uv) {
    const Point2 s = bilinear(original, uv);
    for (int ch = 0; ch < 3; ++ch) out.layer.image.at(x, y, ch) = to_byte(sample_bilinear(src, s.x(), s.y(), ch));
    out.layer.mask(y, x) = 1;
  };

  std::vector<bool> valid(static_cast<std::size_t>(mesh.cell_count()));
  for (int r = 0; r < mesh.rows; ++r) {
    for (int c = 0; c < mesh.cols; ++c) {
      const int cell = r * mesh.cols + c;
      valid[cell] = quad_is_valid(mesh, placed, r, c);
      if (!valid[cell]) {
        out.folded.push_back(cell);
        continue;
      }
      const auto quad = cell_corners(mesh, placed, r, c);
      const auto original = original_corners(mesh, r, c);
      const PixelRange range = pixel_range(quad, canvas);
      for (int y = range.y0; y <= range.y1; ++y) {
        for (int x = range.x0; x <= range.x1; ++x) {
          if (out.layer.mask(y, x)) continue;
          Point2 uv;
          if (!invert_bilinear(quad, Point2(x, y), uv)) continue;
          constexpr double eps = 1e-9;
          if (uv.x() < -eps || uv.y() < -eps || uv.x() > 1 + eps || uv.y() > 1 + eps) continue;
          shade(x, y, original, uv.cwiseMax(0.0).cwiseMin(1.0));
        }
      }
    }
  }
  out.folded_cells = static_cast<int>(out.folded.size());
  if (out.folded.empty() || out.folded_cells == mesh.cell_count()) return out;

  for (const int cell : out.folded) {
    const int r = cell / mesh.cols;
    const int c = cell % mesh.cols;
    int best = -1;
    int best_dist = std::numeric_limits<int>::max();
    for (int k = 0; k < mesh.cell_count(); ++k) {
      if (!valid[k]) continue;
      const int d = std::abs(k / mesh.cols - r) + std::abs(k % mesh.cols - c);
      if (d < best_dist) {
        best_dist = d;
        best = k;
      }
    }
    const int br = best / mesh.cols;
    const int bc = best % mesh.cols;
    const auto donor = cell_corners(mesh, placed, br, bc);
    const auto donor_original = original_corners(mesh, br, bc);
    const auto quad = cell_corners(mesh, placed, r, c);
    const PixelRange range = pixel_range(quad, canvas);
    for (int y = range.y0; y <= range.y1; ++y) {
      for (int x = range.x0; x <= range.x1; ++x) {
        const Point2 p(x, y);
        if (out.layer.mask(y, x)) continue;
        if (!in_triangle(p, quad[0], quad[1], quad[3]) && !in_triangle(p, quad[0], quad[3], quad[2])) continue;
        Point2 uv;
        if (invert_bilinear(donor, p, uv)) shade(x, y, donor_original, uv);
      }
    }
  }
  return out;
}

Layer place_reference(const Image& reference, const Canvas& canvas) {
  const Image src = to_rgb(reference);
  Layer out{Image(canvas.width, canvas.height, 3), Mask::Zero(canvas.height, canvas.width)};
  const int ox = static_cast<int>(std::lround(canvas.offset.x()));
  const int oy = static_cast<int>(std::lround(canvas.offset.y()));
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const int cx = x + ox;
      const int cy = y + oy;
      if (cx < 0 || cy < 0 || cx >= canvas.width || cy >= canvas.height) continue;
      for (int ch = 0; ch < 3; ++ch) out.image.at(cx, cy, ch) = src.at(x, y, ch);
      out.mask(cy, cx) = 1;
    }
  }
  return out;
}

WeightMap distance_to_boundary(const Mask& mask) {
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  // one ring of unset pixels around the raster
  const int ph = h + 2;
  const int pw = w + 2;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> grid(static_cast<std::size_t>(ph) * pw, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (mask(y, x)) grid[static_cast<std::size_t>(y + 1) * pw + x + 1] = inf;

  const int n = std::max(ph, pw);
  std::vector<double> f, d(n);
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  for (int x = 0; x < pw; ++x) {
    f.assign(ph, 0.0);
    for (int y = 0; y < ph; ++y) f[y] = grid[static_cast<std::size_t>(y) * pw + x];
    d.resize(ph);
    distance_1d(f, d, v, z);
    for (int y = 0; y < ph; ++y) grid[static_cast<std::size_t>(y) * pw + x] = d[y];
  }
  for (int y = 0; y < ph; ++y) {
    f.assign(grid.begin() + static_cast<std::ptrdiff_t>(y) * pw, grid.begin() + static_cast<std::ptrdiff_t>(y + 1) * pw);
    d.resize(pw);
    distance_1d(f, d, v, z);
    std::copy(d.begin(), d.end(), grid.begin() + static_cast<std::ptrdiff_t>(y) * pw);
  }
  WeightMap out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(y, x) = std::sqrt(grid[static_cast<std::size_t>(y + 1) * pw + x + 1]);
  return out;
}

WeightMap feather_weights(const Mask& target, const Mask& reference) {
  if (target.rows() != reference.rows() || target.cols() != reference.cols()) {
    throw StitchError(ErrorCode::kInvalidArgument, "masks are not aligned");
  }
  const WeightMap dt = distance_to_boundary(target);
  const WeightMap dr = distance_to_boundary(reference);
  WeightMap w = WeightMap::Zero(target.rows(), target.cols());
  for (Eigen::Index y = 0; y < w.rows(); ++y) {
    for (Eigen::Index x = 0; x < w.cols(); ++x) {
      if (target(y, x) && reference(y, x)) {
        w(y, x) = dt(y, x) / (dt(y, x) + dr(y, x));
      } else if (target(y, x)) {
        w(y, x) = 1.0;
      }
    }
  }
  return w;
}

Layer blend(const Layer& target, const Layer& reference) {
  const Image& a = target.image;
  const Image& b = reference.image;
  if (a.width != b.width || a.height != b.height || a.channels != 3 || b.channels != 3 ||
      target.mask.cols() != a.width || target.mask.rows() != a.height ||
      reference.mask.cols() != b.width || reference.mask.rows() != b.height) {
    throw StitchError(ErrorCode::kInvalidArgument, "layers are not aligned to one canvas");
  }
  const WeightMap w = feather_weights(target.mask, reference.mask);
  Layer out{Image(a.width, a.height, 3), Mask::Zero(a.height, a.width)};
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      const bool in_a = target.mask(y, x) != 0;
      const bool in_b = reference.mask(y, x) != 0;
      if (!in_a && !in_b) continue;
      out.mask(y, x) = 1;
      for (int ch = 0; ch < 3; ++ch) {
        if (in_a && in_b) {
          out.image.at(x, y, ch) = to_byte(w(y, x) * a.at(x, y, ch) + (1.0 - w(y, x)) * b.at(x, y, ch));
        } else {
          out.image.at(x, y, ch) = in_a ? a.at(x, y, ch) : b.at(x, y, ch);
        }
      }
    }
  }
  return out;
}

}  // namespace pstitch
