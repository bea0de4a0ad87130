#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "pstitch/error.hpp"

namespace pstitch {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Point2 = Vec2<double>;

/// 2-D cross product (z component of the 3-D cross of the embedded vectors).
template <typename Scalar>
inline Scalar cross2(const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

/// Undirected line orientation folded into [0, pi).
template <typename Scalar>
inline Scalar direction_angle(const Vec2<Scalar>& d) {
  using std::atan2;
  Scalar a = atan2(d.y(), d.x());
  const Scalar pi = std::numbers::pi_v<Scalar>;
  if (a < Scalar(0)) a += pi;
  if (a >= pi) a -= pi;
  return a;
}

/// Wraparound distance between two orientations in [0, pi); result in [0, pi/2].
template <typename Scalar>
inline Scalar angle_distance(Scalar a, Scalar b) {
  using std::abs;
  using std::fmod;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  Scalar d = fmod(abs(a - b), pi);
  return d < pi - d ? d : pi - d;
}

template <typename Scalar>
struct Segment {
  Vec2<Scalar> start = Vec2<Scalar>::Zero();
  Vec2<Scalar> end = Vec2<Scalar>::Zero();

  Segment() = default;
  Segment(const Vec2<Scalar>& s, const Vec2<Scalar>& e) : start(s), end(e) {}
  Segment(Scalar x1, Scalar y1, Scalar x2, Scalar y2) : start(x1, y1), end(x2, y2) {}

  Vec2<Scalar> vector() const { return end - start; }
  Scalar length() const { return vector().norm(); }
  Vec2<Scalar> direction() const { return vector().normalized(); }
  /// Unit normal: direction rotated by +90 degrees.
  Vec2<Scalar> normal() const {
    const Vec2<Scalar> d = direction();
    return Vec2<Scalar>(-d.y(), d.x());
  }
  Scalar angle() const { return direction_angle<Scalar>(vector()); }
  Vec2<Scalar> midpoint() const { return (start + end) / Scalar(2); }
  Vec2<Scalar> at(Scalar t) const { return start + t * (end - start); }
  Segment reversed() const { return Segment(end, start); }

  /// Unsigned distance from p to the infinite line through the segment.
  Scalar line_distance(const Vec2<Scalar>& p) const {
    using std::abs;
    return abs(cross2<Scalar>(direction(), p - start));
  }

  /// Unsigned distance from p to the closed segment.
  Scalar segment_distance(const Vec2<Scalar>& p) const {
    const Vec2<Scalar> v = vector();
    const Scalar len2 = v.squaredNorm();
    if (len2 <= Scalar(0)) return (p - start).norm();
    Scalar t = (p - start).dot(v) / len2;
    t = t < Scalar(0) ? Scalar(0) : (t > Scalar(1) ? Scalar(1) : t);
    return (p - at(t)).norm();
  }
};

using LineSegment = Segment<double>;

/// Smallest of the four endpoint-to-endpoint distances.
template <typename Scalar>
Scalar endpoint_gap(const Segment<Scalar>& a, const Segment<Scalar>& b) {
  using std::min;
  return min(min((a.start - b.start).norm(), (a.start - b.end).norm()),
             min((a.end - b.start).norm(), (a.end - b.end).norm()));
}

/// Two segments with the same endpoints (either orientation) within tol.
template <typename Scalar>
bool same_endpoints(const Segment<Scalar>& a, const Segment<Scalar>& b, Scalar tol) {
  return ((a.start - b.start).norm() <= tol && (a.end - b.end).norm() <= tol) ||
         ((a.start - b.end).norm() <= tol && (a.end - b.start).norm() <= tol);
}

/// Intersection of the infinite lines through two segments.
/// Throws no-intersection when |sin| of the enclosed angle is <= 1e-9.
template <typename Scalar>
Vec2<Scalar> intersect_lines(const Segment<Scalar>& l1, const Segment<Scalar>& l2) {
  using std::abs;
  const Vec2<Scalar> d1 = l1.vector();
  const Vec2<Scalar> d2 = l2.vector();
  const Scalar n1 = d1.norm();
  const Scalar n2 = d2.norm();
  if (n1 <= Scalar(0) || n2 <= Scalar(0)) {
    throw StitchError(ErrorCode::kNoIntersection, "zero-length segment has no line");
  }
  const Scalar denom = cross2<Scalar>(d1, d2);
  if (abs(denom) <= Scalar(1e-9) * n1 * n2) {
    throw StitchError(ErrorCode::kNoIntersection, "lines are parallel");
  }
  const Scalar t = cross2<Scalar>(Vec2<Scalar>(l2.start - l1.start), d2) / denom;
  return l1.start + t * d1;
}

enum class HomographyNormalization { kBottomRight, kFrobenius };

/// Invertible 3x3 projective map, stored normalized (h33 = 1, or unit
/// Frobenius norm when h33 is numerically zero).
template <typename Scalar>
class HomographyT {
 public:
  using Matrix = Mat3<Scalar>;

  HomographyT() : m_(Matrix::Identity()) {}

  explicit HomographyT(const Matrix& m) {
    using std::abs;
    const Scalar fro = m.norm();
    if (!(fro > Scalar(0)) || !m.allFinite()) {
      throw StitchError(ErrorCode::kInvalidArgument, "homography matrix is zero or non-finite");
    }
    if (abs(m(2, 2)) > Scalar(1e-12) * fro) {
      m_ = m / m(2, 2);
      norm_ = HomographyNormalization::kBottomRight;
    } else {
      m_ = m / fro;
      norm_ = HomographyNormalization::kFrobenius;
    }
    const Scalar scale = m_.norm();
    if (abs(m_.determinant()) <= Scalar(1e-14) * scale * scale * scale) {
      throw StitchError(ErrorCode::kInvalidArgument, "homography is singular");
    }
  }

  static HomographyT identity() { return HomographyT(); }
  static HomographyT translation(Scalar tx, Scalar ty) {
    Matrix m = Matrix::Identity();
    m(0, 2) = tx;
    m(1, 2) = ty;
    return HomographyT(m);
  }

  const Matrix& matrix() const { return m_; }
  HomographyNormalization normalization() const { return norm_; }
  HomographyT inverse() const { return HomographyT(Matrix(m_.inverse())); }

  Scalar operator()(int r, int c) const { return m_(r, c); }

 private:
  Matrix m_;
  HomographyNormalization norm_ = HomographyNormalization::kBottomRight;
};

using Homography = HomographyT<double>;

template <typename Scalar>
HomographyT<Scalar> operator*(const HomographyT<Scalar>& a, const HomographyT<Scalar>& b) {
  return HomographyT<Scalar>(Mat3<Scalar>(a.matrix() * b.matrix()));
}

/// Projective point mapping; throws degenerate-mapping when |w| < 1e-12.
template <typename Scalar>
Vec2<Scalar> apply_homography(const HomographyT<Scalar>& h, const Vec2<Scalar>& p) {
  using std::abs;
  const Eigen::Matrix<Scalar, 3, 1> q = h.matrix() * p.homogeneous();
  if (abs(q.z()) < Scalar(1e-12)) {
    throw StitchError(ErrorCode::kDegenerateMapping, "point maps to infinity");
  }
  return q.hnormalized();
}

template <typename Scalar>
Segment<Scalar> apply_homography(const HomographyT<Scalar>& h, const Segment<Scalar>& s) {
  return Segment<Scalar>(apply_homography(h, s.start), apply_homography(h, s.end));
}

/// Regular vertex grid over [origin, origin + (width, height)].
///
/// Vertex (r, c) has flat index r * (cols + 1) + c; its coordinates occupy
/// entries 2 * index (x) and 2 * index + 1 (y) of a MeshVertexVector.
/// The last row/column of cells is clamped to the image border, so it may be
/// narrower than cell_w / cell_h.
struct MeshGrid {
  int rows = 1;
  int cols = 1;
  double cell_w = 1.0;
  double cell_h = 1.0;
  Point2 origin = Point2::Zero();
  double width = 1.0;
  double height = 1.0;

  int vertex_count() const { return (rows + 1) * (cols + 1); }
  int unknowns() const { return 2 * vertex_count(); }
  int cell_count() const { return rows * cols; }
  int vertex_index(int r, int c) const { return r * (cols + 1) + c; }

  double vertex_x(int c) const;
  double vertex_y(int r) const;
  Point2 vertex(int r, int c) const { return {vertex_x(c), vertex_y(r)}; }

  /// Boundary-inclusive containment with a small absolute slack.
  bool contains(const Point2& p, double slack = 1e-9) const;
  bool contains(const LineSegment& s, double slack = 1e-9) const {
    return contains(s.start, slack) && contains(s.end, slack);
  }

  friend bool operator==(const MeshGrid& a, const MeshGrid& b) {
    return a.rows == b.rows && a.cols == b.cols && a.cell_w == b.cell_w &&
           a.cell_h == b.cell_h && a.origin == b.origin && a.width == b.width &&
           a.height == b.height;
  }
};

/// Flat [x1 y1 ... xn yn] coordinates of every grid vertex.
using MeshVertexVector = Eigen::VectorXd;

MeshGrid build_mesh(double image_w, double image_h, double cell_size);

/// Undeformed vertex positions of the grid.
MeshVertexVector original_vertices(const MeshGrid& mesh);

inline Point2 vertex_at(const MeshVertexVector& v, int index) {
  return {v[2 * index], v[2 * index + 1]};
}

/// Bilinear weights of a point over the four corners of its containing cell,
/// ordered top-left, top-right, bottom-left, bottom-right.
struct BilinearAnchor {
  int row = 0;
  int col = 0;
  std::array<int, 4> vertices{};
  std::array<double, 4> weights{};
  int mesh_vertex_count = 0;
};

BilinearAnchor bilinear_anchor(const MeshGrid& mesh, const Point2& p);

/// Weighted sum of the anchor's corner vertices in v (the sigma operator).
Point2 apply_anchor(const BilinearAnchor& a, const MeshVertexVector& v);

/// Maps target-image points through a deformed mesh.
struct MeshWarp {
  MeshGrid mesh;
  MeshVertexVector vertices;

  Point2 map(const Point2& p) const { return apply_anchor(bilinear_anchor(mesh, p), vertices); }
};

/// Vertices of the grid mapped through h.
MeshVertexVector map_vertices(const MeshGrid& mesh, const Homography& h);

}  // namespace pstitch
