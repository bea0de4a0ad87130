#include <doctest.h>

#include <algorithm>

#include "pstitch/metrics.hpp"
#include "support.hpp"

using namespace pstitch;

namespace {

MeshWarp identity_warp(double w, double h) {
  const MeshGrid mesh = build_mesh(w, h, 40);
  return {mesh, original_vertices(mesh)};
}

IndirectPair pair_of(const Point2& p, const Point2& a, const Point2& b, const Point2& ph, const Point2& ah,
                     const Point2& bh) {
  IndirectPair out;
  out.l1 = LineSegment(p, a);
  out.l2 = LineSegment(p, b);
  out.l1_hat = LineSegment(ph, ah);
  out.l2_hat = LineSegment(ph, bh);
  return out;
}

// Formula evaluated through angles rather than cross products.
double oracle_d_dir(const std::vector<IndirectPair>& pairs) {
  auto sin2 = [](const LineSegment& u, const LineSegment& v) {
    const Point2 du = u.end - u.start, dv = v.end - v.start;
    const double t = std::atan2(dv.y(), dv.x()) - std::atan2(du.y(), du.x());
    return std::sin(t) * std::sin(t);
  };
  double s = 0;
  for (const IndirectPair& p : pairs) s += std::abs(sin2(p.l1, p.l2) - sin2(p.l1_hat, p.l2_hat));
  return std::sqrt(s / pairs.size());
}

double oracle_d_dis(const std::vector<IndirectPair>& pairs) {
  double s = 0;
  for (const IndirectPair& p : pairs) {
    const double before = p.l1.length() / p.l2.length();
    const double after = p.l1_hat.length() / p.l2_hat.length();
    s += (before - after) * (before - after);
  }
  return std::sqrt(s / pairs.size());
}

MeshWarp perturbed_warp(testing::Gen& gen, double w, double h, double amount) {
  MeshWarp warp = identity_warp(w, h);
  for (int i = 0; i < warp.vertices.size(); ++i) warp.vertices[i] += gen.uniform(-amount, amount);
  return warp;
}

struct Features {
  std::vector<Point2> points;
  std::vector<LineSegment> lines;
};

Features random_features(testing::Gen& gen, double w, double h) {
  Features f;
  for (int i = 0; i < gen.integer(3, 10); ++i) f.points.push_back(gen.point(w, h));
  for (int i = 0; i < gen.integer(2, 8); ++i) f.lines.emplace_back(gen.point(w, h), gen.point(w, h));
  return f;
}

}  // namespace

TEST_CASE("indirect pair examples") {
  const MeshWarp warp = identity_warp(80, 80);
  PlanePolicy policy;
  policy.min_leg_length = 1;
  SUBCASE("legs to both endpoints") {
    const IndirectPairSet s = build_indirect_pairs({Point2(5, 5)}, {LineSegment(0, 0, 10, 0)}, warp, policy);
    REQUIRE(s.pairs.size() == 1);
    CHECK(same_endpoints(s.pairs[0].l1, LineSegment(5, 5, 0, 0), 0.0));
    CHECK(same_endpoints(s.pairs[0].l2, LineSegment(5, 5, 10, 0), 0.0));
    CHECK(same_endpoints(s.pairs[0].l1_hat, s.pairs[0].l1, 1e-12));
    CHECK(same_endpoints(s.pairs[0].l2_hat, s.pairs[0].l2, 1e-12));
  }
  SUBCASE("point on the line") {
    const IndirectPairSet s = build_indirect_pairs({Point2(5, 0)}, {LineSegment(0, 0, 10, 0)}, warp, policy);
    CHECK(s.pairs.empty());
    CHECK(s.excluded_degenerate == 1);
  }
  SUBCASE("collapsed leg after warping") {
    MeshWarp squashed = warp;
    for (int i = 0; i < squashed.vertices.size(); ++i) squashed.vertices[i] = 0;
    const IndirectPairSet s = build_indirect_pairs({Point2(5, 5)}, {LineSegment(0, 0, 10, 0)}, squashed, policy);
    CHECK(s.pairs.empty());
    CHECK(s.excluded_degenerate == 1);
  }
}

TEST_CASE("D_dis examples") {
  const auto id = pair_of({0, 0}, {2, 0}, {0, 1}, {0, 0}, {2, 0}, {0, 1});
  CHECK(d_dis({id}) == 0.0);
  const auto scaled = pair_of({0, 0}, {2, 0}, {0, 1}, {0, 0}, {6, 0}, {0, 3});
  CHECK(d_dis({scaled}) == doctest::Approx(0.0));
  const auto ratio_change = pair_of({0, 0}, {2, 0}, {0, 1}, {0, 0}, {2, 0}, {0, 2});
  CHECK(d_dis({ratio_change}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(d_dis({}), StitchError);
}

TEST_CASE("D_dir examples") {
  const auto id = pair_of({0, 0}, {2, 0}, {0, 1}, {0, 0}, {2, 0}, {0, 1});
  CHECK(d_dir({id}) == 0.0);
  const double a = 0.7;
  const Point2 r1(2 * std::cos(a), 2 * std::sin(a)), r2(-std::sin(a), std::cos(a));
  CHECK(d_dir({pair_of({0, 0}, {2, 0}, {0, 1}, {5, 5}, Point2(5, 5) + r1, Point2(5, 5) + r2)}) < 1e-7);
  const auto flattened = pair_of({0, 0}, {2, 0}, {0, 1}, {0, 0}, {2, 0}, {3, 0});
  CHECK(d_dir({flattened}) == doctest::Approx(1.0));
  CHECK(d_dir({flattened}, false) == doctest::Approx(std::sqrt(4.0)));
  try {
    d_dir({});
    FAIL("expected undefined-metric");
  } catch (const StitchError& e) {
    CHECK(e.code() == ErrorCode::kUndefinedMetric);
  }
}

TEST_CASE("RMSE examples") {
  const MeshWarp warp = identity_warp(80, 80);
  CHECK(rmse({{Point2(10, 10), Point2(10, 10)}}, warp) == 0.0);
  CHECK(rmse({{Point2(10, 10), Point2(13, 14)}}, warp) == doctest::Approx(5.0));
  CHECK(rmse({{Point2(10, 10), Point2(10, 10)}, {Point2(20, 20), Point2(20, 22)}}, warp) ==
        doctest::Approx(std::sqrt(2.0)));
  try {
    rmse({}, warp);
    FAIL("expected undefined-metric");
  } catch (const StitchError& e) {
    CHECK(e.code() == ErrorCode::kUndefinedMetric);
  }
}

TEST_CASE("metrics agree with independent formulas and vanish at identity (property)") {
  testing::Gen gen(51);
  for (int trial = 0; trial < 40; ++trial) {
    const Features f = random_features(gen, 240, 200);
    PlanePolicy policy;
    policy.min_leg_length = 10;
    const IndirectPairSet at_identity = build_indirect_pairs(f.points, f.lines, identity_warp(240, 200), policy);
    if (!at_identity.pairs.empty()) {
      // bilinear interpolation rounds at the 1e-16 level and the square root
      // in D_dir lifts that to about 1e-8
      CHECK(d_dis(at_identity.pairs) < 1e-12);
      CHECK(d_dir(at_identity.pairs) < 1e-7);
    }
    const IndirectPairSet s = build_indirect_pairs(f.points, f.lines, perturbed_warp(gen, 240, 200, 8), policy);
    if (s.pairs.empty()) continue;
    CHECK(d_dis(s.pairs) == doctest::Approx(oracle_d_dis(s.pairs)));
    CHECK(d_dir(s.pairs) == doctest::Approx(oracle_d_dir(s.pairs)));
    std::vector<IndirectPair> shuffled = s.pairs;
    std::shuffle(shuffled.begin(), shuffled.end(), gen.engine());
    CHECK(d_dis(shuffled) == doctest::Approx(d_dis(s.pairs)).epsilon(1e-12));
    CHECK(d_dir(shuffled) == doctest::Approx(d_dir(s.pairs)).epsilon(1e-12));
  }
}

TEST_CASE("D_dis is similarity invariant and D_dir rigid invariant (property)") {
  testing::Gen gen(52);
  for (int trial = 0; trial < 30; ++trial) {
    const Features f = random_features(gen, 240, 200);
    PlanePolicy policy;
    policy.min_leg_length = 10;
    const MeshWarp warp = perturbed_warp(gen, 240, 200, 6);
    const double a = gen.uniform(-3, 3);
    const double scale = gen.uniform(0.3, 3);
    Eigen::Matrix3d sim;
    sim << scale * std::cos(a), -scale * std::sin(a), gen.uniform(-90, 90), scale * std::sin(a),
        scale * std::cos(a), gen.uniform(-90, 90), 0, 0, 1;
    Eigen::Matrix3d rigid = sim;
    rigid.topLeftCorner<2, 2>() /= scale;
    MeshWarp similar = warp, moved = warp;
    for (int i = 0; i < warp.vertices.size() / 2; ++i) {
      const Point2 v = vertex_at(warp.vertices, i);
      similar.vertices.segment<2>(2 * i) = (sim * v.homogeneous()).hnormalized();
      moved.vertices.segment<2>(2 * i) = (rigid * v.homogeneous()).hnormalized();
    }
    const IndirectPairSet base = build_indirect_pairs(f.points, f.lines, warp, policy);
    if (base.pairs.empty()) continue;
    CHECK(d_dis(build_indirect_pairs(f.points, f.lines, similar, policy).pairs) ==
          doctest::Approx(d_dis(base.pairs)).epsilon(1e-9));
    CHECK(d_dir(build_indirect_pairs(f.points, f.lines, moved, policy).pairs) ==
          doctest::Approx(d_dir(base.pairs)).epsilon(1e-7));
  }
}

TEST_CASE("RMSE vanishes up to rounding exactly when every match is aligned (property)") {
  testing::Gen gen(53);
  const MeshWarp warp = identity_warp(200, 200);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<PointMatch> m;
    for (int i = 0; i < gen.integer(1, 10); ++i) {
      const Point2 p = gen.point(200, 200);
      m.push_back({p, p});
    }
    CHECK(rmse(m, warp) < 1e-12);
    const std::size_t k = gen.integer(0, static_cast<int>(m.size()) - 1);
    m[k].q += Point2(gen.uniform(0.001, 1), 0);
    CHECK(rmse(m, warp) > 1e-4);
    std::vector<PointMatch> shuffled = m;
    std::shuffle(shuffled.begin(), shuffled.end(), gen.engine());
    CHECK(rmse(shuffled, warp) == doctest::Approx(rmse(m, warp)).epsilon(1e-12));
  }
}

TEST_CASE("evaluate reports every field") {
  MatchSet m;
  m.points = {{Point2(10, 10), Point2(13, 14)}, {Point2(50, 60), Point2(50, 60)}};
  m.lines = {{LineSegment(0, 0, 70, 0), LineSegment(0, 0, 70, 0)}};
  PlanePolicy policy;
  policy.min_leg_length = 5;
  const MetricReport r = evaluate(m, identity_warp(80, 80), policy);
  CHECK(r.rmse == doctest::Approx(std::sqrt(12.5)));
  CHECK(r.k == 2);
  CHECK(r.d_dis == 0.0);
  CHECK(r.d_dir == 0.0);
  CHECK(r.excluded_degenerate == 0);
  CHECK(r.per_pair.size() == 2);
  CHECK(r.d_dir_normalized);
}
