#include <doctest.h>

#include "pstitch/geometry.hpp"
#include "support.hpp"

using namespace pstitch;

namespace {

// Intersection through homogeneous line coordinates, independent of the
// parametric formula in intersect_lines.
Point2 homogeneous_intersection(const LineSegment& a, const LineSegment& b) {
  const Eigen::Vector3d la = a.start.homogeneous().cross(a.end.homogeneous());
  const Eigen::Vector3d lb = b.start.homogeneous().cross(b.end.homogeneous());
  return la.cross(lb).hnormalized();
}

}  // namespace

TEST_CASE("direction angles fold into [0, pi) and wrap") {
  CHECK(direction_angle<double>(Point2(1, 0)) == doctest::Approx(0.0));
  CHECK(direction_angle<double>(Point2(-1, 0)) == doctest::Approx(0.0));
  CHECK(direction_angle<double>(Point2(0, -1)) == doctest::Approx(std::numbers::pi / 2));
  CHECK(angle_distance(0.01, std::numbers::pi - 0.01) == doctest::Approx(0.02));
  CHECK(angle_distance(0.0, std::numbers::pi / 2) == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("segment basics") {
  const LineSegment s(0, 0, 10, 0);
  CHECK(s.length() == 10);
  CHECK(s.normal().isApprox(Point2(0, 1)));
  CHECK(s.line_distance(Point2(5, 3)) == doctest::Approx(3));
  CHECK(s.segment_distance(Point2(13, 4)) == doctest::Approx(5));
  CHECK(endpoint_gap(s, LineSegment(12, 0, 20, 0)) == doctest::Approx(2));
  CHECK(same_endpoints(s, s.reversed(), 1e-12));
}

TEST_CASE("intersect_lines matches the homogeneous-coordinate oracle") {
  testing::Gen gen(7);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const LineSegment a(gen.point(100, 100), gen.point(100, 100));
    const LineSegment b(gen.point(100, 100), gen.point(100, 100));
    if (a.length() < 1 || b.length() < 1 || angle_distance(a.angle(), b.angle()) < 0.05) continue;
    const Point2 p = intersect_lines(a, b);
    const Point2 oracle = homogeneous_intersection(a, b);
    CHECK((p - oracle).norm() <= 1e-9 * std::max(1.0, oracle.norm()));
    CHECK(a.line_distance(p) < 1e-6);
    ++checked;
  }
  CHECK(checked > 300);
}

TEST_CASE("parallel lines have no intersection") {
  const LineSegment a(0, 0, 10, 0);
  const LineSegment b(0, 5, 10, 5);
  try {
    intersect_lines(a, b);
    FAIL("expected no-intersection");
  } catch (const StitchError& e) {
    CHECK(e.code() == ErrorCode::kNoIntersection);
  }
}

TEST_CASE("homography normalization and singular input") {
  Eigen::Matrix3d m;
  m << 2, 0, 4, 0, 2, 6, 0, 0, 2;
  const Homography h(m);
  CHECK(h(2, 2) == 1.0);
  CHECK(apply_homography(h, Point2(1, 1)).isApprox(Point2(3, 4)));
  CHECK_THROWS_AS(Homography(Eigen::Matrix3d::Zero()), StitchError);
  Eigen::Matrix3d singular;
  singular << 1, 2, 3, 2, 4, 6, 0, 0, 1;
  CHECK_THROWS_AS(Homography{singular}, StitchError);

  Eigen::Matrix3d zero_corner;
  zero_corner << 1, 0, 0, 0, 0, 1, 0, 1, 0;
  const Homography hz(zero_corner);
  CHECK(hz.normalization() == HomographyNormalization::kFrobenius);
}

TEST_CASE("homography round trip and composition (property)") {
  testing::Gen gen(11);
  for (int i = 0; i < 100; ++i) {
    const Homography h = gen.homography();
    const Homography g = gen.homography();
    const Point2 p = gen.point(500, 500);
    const Point2 back = apply_homography(h.inverse(), apply_homography(h, p));
    CHECK((back - p).norm() < 1e-7);
    const Point2 composed = apply_homography(h * g, p);
    const Point2 chained = apply_homography(h, apply_homography(g, p));
    CHECK((composed - chained).norm() < 1e-6 * std::max(1.0, chained.norm()));
  }
}

TEST_CASE("point at infinity is a degenerate mapping") {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(2, 0) = -0.01;  // w = 0 at x = 100
  const Homography h(m);
  try {
    apply_homography(h, Point2(100, 5));
    FAIL("expected degenerate-mapping");
  } catch (const StitchError& e) {
    CHECK(e.code() == ErrorCode::kDegenerateMapping);
  }
}

TEST_CASE("mesh layout and vertex indexing") {
  const MeshGrid mesh = build_mesh(100, 60, 40);
  CHECK(mesh.rows == 2);
  CHECK(mesh.cols == 3);
  CHECK(mesh.vertex_count() == 12);
  CHECK(mesh.unknowns() == 24);
  CHECK(mesh.vertex_index(1, 2) == 6);
  CHECK(mesh.vertex(2, 3).isApprox(Point2(100, 60)));
  CHECK(mesh.vertex(1, 1).isApprox(Point2(40, 40)));
  const MeshVertexVector v = original_vertices(mesh);
  CHECK(vertex_at(v, mesh.vertex_index(1, 2)).isApprox(Point2(80, 40)));
  CHECK(mesh.contains(Point2(100, 60)));
  CHECK_FALSE(mesh.contains(Point2(100.1, 60)));
  CHECK_THROWS_AS(build_mesh(0, 10, 40), StitchError);
  CHECK_THROWS_AS(build_mesh(10, 10, -1), StitchError);
}

TEST_CASE("bilinear anchor weights") {
  const MeshGrid mesh = build_mesh(80, 80, 40);
  const BilinearAnchor a = bilinear_anchor(mesh, Point2(10, 30));
  CHECK(a.row == 0);
  CHECK(a.col == 0);
  CHECK(a.weights[0] == doctest::Approx(0.75 * 0.25));
  CHECK(a.weights[1] == doctest::Approx(0.25 * 0.25));
  CHECK(a.weights[2] == doctest::Approx(0.75 * 0.75));
  CHECK(a.weights[3] == doctest::Approx(0.25 * 0.75));
  CHECK(a.vertices == std::array<int, 4>{0, 1, 3, 4});
  CHECK_THROWS_AS(bilinear_anchor(mesh, Point2(-1, 3)), StitchError);

  MeshVertexVector short_vector = MeshVertexVector::Zero(4);
  CHECK_THROWS_AS(apply_anchor(a, short_vector), StitchError);
}

TEST_CASE("sigma reproduces points under identity and affine meshes (property)") {
  testing::Gen gen(3);
  const MeshGrid mesh = build_mesh(237, 151, 40);
  const MeshVertexVector v = original_vertices(mesh);
  for (int i = 0; i < 200; ++i) {
    const Point2 p = gen.point(237, 151);
    const BilinearAnchor a = bilinear_anchor(mesh, p);
    double sum = 0;
    for (double w : a.weights) {
      CHECK(w >= -1e-12);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK((apply_anchor(a, v) - p).norm() < 1e-9);

    const Eigen::Matrix3d m = gen.affine();
    const MeshVertexVector mapped = map_vertices(mesh, Homography(m));
    const Point2 expected = (m * p.homogeneous()).hnormalized();
    CHECK((apply_anchor(a, mapped) - expected).norm() < 1e-8);
  }
}

TEST_CASE("map_vertices applies the homography to every vertex") {
  const MeshGrid mesh = build_mesh(80, 40, 40);
  const MeshVertexVector v = map_vertices(mesh, Homography::translation(5, -2));
  for (int r = 0; r <= mesh.rows; ++r)
    for (int c = 0; c <= mesh.cols; ++c)
      CHECK(vertex_at(v, mesh.vertex_index(r, c)).isApprox(mesh.vertex(r, c) + Point2(5, -2)));
}
