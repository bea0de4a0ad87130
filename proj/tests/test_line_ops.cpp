#include <doctest.h>

#include <algorithm>
#include <set>

#include "pstitch/line_ops.hpp"
#include "pstitch/synthetic.hpp"
#include "support.hpp"

using namespace pstitch;

namespace {

// Total-least-squares direction by exhaustive search over orientations,
// refined by successive grid shrinking.
double brute_force_tls_angle(const std::vector<Point2>& pts) {
  Point2 c = Point2::Zero();
  for (const Point2& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  auto cost = [&](double a) {
    const Point2 n(-std::sin(a), std::cos(a));
    double s = 0;
    for (const Point2& p : pts) s += std::pow((p - c).dot(n), 2);
    return s;
  };
  double best = 0;
  double lo = 0, hi = std::numbers::pi, step = std::numbers::pi / 3600;
  for (int round = 0; round < 6; ++round) {
    double best_cost = std::numeric_limits<double>::infinity();
    for (double a = lo; a <= hi; a += step) {
      if (cost(a) < best_cost) {
        best_cost = cost(a);
        best = a;
      }
    }
    lo = best - step;
    hi = best + step;
    step /= 50;
  }
  return direction_angle<double>(Point2(std::cos(best), std::sin(best)));
}

std::set<std::set<int>> as_partition(const std::vector<std::vector<int>>& groups) {
  std::set<std::set<int>> out;
  for (const auto& g : groups) out.insert(std::set<int>(g.begin(), g.end()));
  return out;
}

}  // namespace

TEST_CASE("connect_segments examples") {
  SUBCASE("collinear with small gap") {
    const auto r = connect_segments({{0, 0, 10, 0}, {12, 0, 20, 0}}, {0.05, 5});
    REQUIRE(r.groups.size() == 1);
    CHECK(same_endpoints(r.merged[0], LineSegment(0, 0, 20, 0), 1e-9));
  }
  SUBCASE("parallel offset beyond d_th") {
    const auto r = connect_segments({{0, 0, 10, 0}, {0, 5, 10, 5}}, {0.05, 3});
    CHECK(r.groups.size() == 2);
  }
  SUBCASE("perpendicular") {
    const auto r = connect_segments({{0, 0, 10, 0}, {11, 1, 11, 11}}, {0.05, 5});
    CHECK(r.groups.size() == 2);
  }
  SUBCASE("non-positive tolerances") { CHECK_THROWS_AS(connect_segments({{0, 0, 1, 0}}, {0, 5}), StitchError); }
}

TEST_CASE("visit order does not split a bridged group") {
  // the middle fragment arrives last and joins the two outer ones
  const auto r = connect_segments({{0, 0, 10, 0}, {30, 0, 40, 0}, {14, 0, 26, 0}}, {0.05, 5});
  REQUIRE(r.groups.size() == 1);
  CHECK(r.groups[0] == std::vector<int>{0, 1, 2});
}

TEST_CASE("merge_group examples") {
  SUBCASE("single segment") {
    const LineSegment s(3, 4, 9, 1);
    const LineSegment m = merge_group({s});
    CHECK(m.start == s.start);
    CHECK(m.end == s.end);
  }
  SUBCASE("collinear pair") {
    CHECK(same_endpoints(merge_group({{0, 0, 10, 0}, {12, 0, 20, 0}}), LineSegment(0, 0, 20, 0), 1e-9));
  }
  SUBCASE("offset pair against the brute-force TLS oracle") {
    const std::vector<LineSegment> g{{0, 0, 10, 0}, {10, 0.2, 20, 0.2}};
    const LineSegment m = merge_group(g);
    const double oracle = brute_force_tls_angle({g[0].start, g[0].end, g[1].start, g[1].end});
    CHECK(angle_distance(m.angle(), oracle) < 1e-7);
    CHECK(angle_distance(m.angle(), 0.0) < 0.02);
    CHECK(m.length() == doctest::Approx(20).epsilon(0.01));
  }
  SUBCASE("empty group") { CHECK_THROWS_AS(merge_group({}), StitchError); }
}

TEST_CASE("merge_group agrees with the TLS oracle on random groups (property)") {
  testing::Gen gen(21);
  for (int i = 0; i < 50; ++i) {
    const double a = gen.uniform(0, std::numbers::pi);
    const Point2 d(std::cos(a), std::sin(a));
    const Point2 n(-d.y(), d.x());
    std::vector<LineSegment> g;
    std::vector<Point2> pts;
    double t = 0;
    for (int k = 0; k < gen.integer(2, 5); ++k) {
      const double len = gen.uniform(5, 30);
      const LineSegment s(t * d + gen.uniform(-1, 1) * n, (t + len) * d + gen.uniform(-1, 1) * n);
      g.push_back(s);
      pts.push_back(s.start);
      pts.push_back(s.end);
      t += len + gen.uniform(1, 4);
    }
    const LineSegment m = merge_group(g);
    CHECK(angle_distance(m.angle(), brute_force_tls_angle(pts)) < 1e-6);
    for (const Point2& p : pts) {
      const double proj = (p - m.start).dot(m.direction());
      CHECK(proj >= -1e-9);
      CHECK(proj <= m.length() + 1e-9);
    }
  }
}

TEST_CASE("connect_segments recovers the source lines, merges within tolerance and is idempotent (property)") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    BrokenLineOptions opt;
    opt.perpendicular_families = seed % 2 == 1;
    const BrokenLineSet set = gen_broken_line_set(seed, 6, 3.0, opt);
    const ConnectionParams params{0.05, 10.0};
    const LineGroupSet r = connect_segments(set.segments, params);

    std::vector<int> seen(set.segments.size(), 0);
    for (std::size_t g = 0; g < r.groups.size(); ++g) {
      for (const int i : r.groups[g]) {
        ++seen[i];
        CHECK(r.group_of[i] == static_cast<int>(g));
        CHECK(angle_distance(r.merged[g].angle(), set.segments[i].angle()) < params.slope_tol);
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

    std::vector<std::vector<int>> truth(set.line_count);
    for (std::size_t i = 0; i < set.segments.size(); ++i) truth[set.line_of[i]].push_back(static_cast<int>(i));
    CHECK(as_partition(r.groups) == as_partition(truth));

    const LineGroupSet again = connect_segments(r.merged, params);
    CHECK(again.groups.size() == r.merged.size());
  }
}

TEST_CASE("extend_point_matches examples") {
  const ImageBounds bounds{100, 100};
  SUBCASE("axis pairs") {
    std::vector<LineMatch> lines{{{0, 0, 50, 0}, {0, 0, 50, 0}}, {{0, 0, 0, 50}, {0, 0, 0, 50}}};
    const auto out = extend_point_matches(lines, bounds, bounds);
    REQUIRE(out.size() == 1);
    CHECK(out[0].p.isApprox(Point2(0, 0)));
    CHECK(out[0].q.isApprox(Point2(0, 0)));
    CHECK(out[0].origin == MatchOrigin::kExtended);
  }
  SUBCASE("parallel lines") {
    std::vector<LineMatch> lines{{{0, 0, 50, 0}, {0, 0, 50, 0}}, {{0, 10, 50, 10}, {0, 10, 50, 10}}};
    CHECK(extend_point_matches(lines, bounds, bounds).empty());
  }
  SUBCASE("intersection beyond the padded bounds") {
    std::vector<LineMatch> lines{{{0, 0, 10, 0}, {0, 0, 10, 0}}, {{300, 5, 300, 50}, {300, 5, 300, 50}}};
    CHECK(extend_point_matches(lines, bounds, bounds, {40, 10, 1}).empty());
    CHECK(extend_point_matches(lines, bounds, bounds, {200, 10, 1}).size() == 1);
  }
}

TEST_CASE("filter_extended examples") {
  const Homography h = Homography::translation(5, 0);
  std::vector<PointMatch> m{{Point2(1, 1), Point2(6, 1)}, {Point2(2, 2), Point2(17, 2)}};
  const auto out = filter_extended(m, h, 3.0);
  REQUIRE(out.size() == 1);
  CHECK(out[0].p.isApprox(Point2(1, 1)));
  CHECK(filter_extended({}, h, 3.0).empty());
}

TEST_CASE("extended matches are projectively consistent under a known homography (property)") {
  testing::Gen gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Homography h = gen.homography();
    std::vector<LineMatch> lines;
    for (int i = 0; i < 8; ++i) {
      const LineSegment l(gen.point(300, 300), gen.point(300, 300));
      lines.push_back({l, apply_homography(h, l)});
    }
    const ImageBounds huge{1e6, 1e6};
    for (const PointMatch& m : extend_point_matches(lines, ImageBounds{300, 300}, huge, {1e5, 10, 1})) {
      CHECK((apply_homography(h, m.p) - m.q).norm() <= 1e-6 * std::max(1.0, m.q.norm()));
    }
  }
}
