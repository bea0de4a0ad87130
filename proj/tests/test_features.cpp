#include <doctest.h>

#include <fstream>

#include "pstitch/features.hpp"
#include "pstitch/synthetic.hpp"
#include "support.hpp"

using namespace pstitch;

namespace {

GrayImage checkerboard(int w, int h, int cell, double shift_x = 0) {
  GrayImage g(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = x - shift_x;
      const int i = static_cast<int>(std::floor(sx / cell));
      const int j = y / cell;
      // varying tile brightness keeps descriptors distinguishable
      const int v = 40 + ((i * 37 + j * 91 + (i * j) % 7 * 13) % 9 + 9) % 9 * 20;
      g(y, x) = static_cast<float>(v);
    }
  }
  return g;
}

GrayImage constant(int w, int h, float v) { return GrayImage::Constant(h, w, v); }

Homography known_h() {
  Eigen::Matrix3d m;
  m << 1.02, 0.03, 12.0, -0.02, 0.98, -7.0, 2e-5, -1e-5, 1.0;
  return Homography(m);
}

}  // namespace

TEST_CASE("identical images give zero-displacement matches") {
  const GrayImage img = to_gray(gen_plane_scene(5, 320, 240, Homography::identity()).target);
  const auto matches = detect_and_match_points(img, img);
  REQUIRE(matches.size() >= 4);
  for (const PointMatch& m : matches) CHECK((m.p - m.q).norm() == doctest::Approx(0.0));
}

TEST_CASE("translated checkerboard matches the known shift within 1 px") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const SyntheticScene scene = gen_plane_scene(seed, 320, 240, Homography::translation(10, 0));
    const auto matches = detect_and_match_points(to_gray(scene.target), to_gray(scene.reference));
    REQUIRE(matches.size() >= 4);
    for (const PointMatch& m : matches) CHECK(((m.q - m.p) - Point2(10, 0)).norm() <= 1.0);
  }
}

TEST_CASE("a periodic checkerboard is ambiguous, so matching needs distinct tiles") {
  // documents the failure mode the hashed tile texture avoids
  const auto matches = detect_and_match_points(checkerboard(320, 240, 20), checkerboard(320, 240, 20, 10));
  int wrong = 0;
  for (const PointMatch& m : matches) wrong += ((m.q - m.p) - Point2(10, 0)).norm() > 1.0 ? 1 : 0;
  CHECK(wrong > 0);
}

TEST_CASE("blank images have insufficient features") {
  try {
    detect_and_match_points(constant(200, 200, 128), constant(200, 200, 128));
    FAIL("expected insufficient-features");
  } catch (const StitchError& e) {
    CHECK(e.code() == ErrorCode::kInsufficientFeatures);
  }
}

TEST_CASE("pyramid scale must exceed 1") {
  DetectorConfig cfg;
  cfg.pyramid_scale = 1.0;
  CHECK_THROWS_AS(detect_and_match_points(constant(64, 64, 0), constant(64, 64, 0), cfg), StitchError);
}

TEST_CASE("dedup_points drops near-duplicate pairs only") {
  std::vector<PointMatch> in{{Point2(0, 0), Point2(5, 5)},
                             {Point2(0.5, 0), Point2(5.5, 5)},
                             {Point2(0.5, 0), Point2(9, 9)},
                             {Point2(3, 0), Point2(5, 5)}};
  const auto out = dedup_points(in, 1.0);
  CHECK(out.size() == 3);
  CHECK(out[1].q.isApprox(Point2(9, 9)));
}

TEST_CASE("black bar on white yields near-horizontal edge segments") {
  GrayImage g = constant(200, 120, 255);
  g.block(50, 30, 16, 140) = 0;
  const auto segments = detect_line_segments(g);
  int horizontal = 0;
  for (const LineSegment& s : segments) {
    if (angle_distance(s.angle(), 0.0) <= 2.0 * std::numbers::pi / 180 && s.length() > 60) ++horizontal;
  }
  CHECK(horizontal >= 2);
}

TEST_CASE("constant image has no segments") { CHECK(detect_line_segments(constant(100, 80, 17)).empty()); }

TEST_CASE("45 degree step edge") {
  GrayImage g(160, 160);
  for (int y = 0; y < 160; ++y)
    for (int x = 0; x < 160; ++x) g(y, x) = x > y ? 220.0f : 30.0f;
  const auto segments = detect_line_segments(g);
  REQUIRE_FALSE(segments.empty());
  const LineSegment& longest = segments.front();
  CHECK(angle_distance(longest.angle(), std::numbers::pi / 4) <= 2.0 * std::numbers::pi / 180);
}

TEST_CASE("line matching under a known homography") {
  const Homography h = known_h();
  std::vector<LineSegment> target{{20, 20, 120, 25}, {40, 100, 45, 200}, {150, 60, 260, 170}};
  std::vector<LineSegment> reference;
  for (auto it = target.rbegin(); it != target.rend(); ++it) reference.push_back(apply_homography(h, *it));
  const auto matches = match_lines(target, reference, h);
  REQUIRE(matches.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(same_endpoints(matches[i].l_ref, apply_homography(h, target[i]), 1e-9));
  }

  SUBCASE("identity pairing") {
    const auto self = match_lines(target, target, Homography::identity());
    REQUIRE(self.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(same_endpoints(self[i].l_ref, target[i], 0.0));
  }
  SUBCASE("perpendicular candidates only") {
    std::vector<LineSegment> perpendicular{{70, -30, 70, 70}};
    CHECK(match_lines({LineSegment(20, 20, 120, 20)}, perpendicular, Homography::identity()).empty());
  }
}

TEST_CASE("homography estimation examples") {
  SUBCASE("four exact identity correspondences") {
    std::vector<PointMatch> m{{Point2(0, 0), Point2(0, 0)},
                              {Point2(100, 0), Point2(100, 0)},
                              {Point2(0, 100), Point2(0, 100)},
                              {Point2(100, 100), Point2(100, 100)}};
    const Homography h = estimate_homography(m);
    CHECK((h.matrix() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("20 exact matches plus 5 gross outliers") {
    const Homography truth = known_h();
    testing::Gen gen(99);
    std::vector<PointMatch> m;
    for (int i = 0; i < 20; ++i) {
      const Point2 p = gen.point(400, 300);
      m.push_back({p, apply_homography(truth, p)});
    }
    for (int i = 0; i < 5; ++i) {
      const Point2 p = gen.point(400, 300);
      m.push_back({p, apply_homography(truth, p) + Point2(gen.uniform(30, 80), gen.uniform(-80, -30))});
    }
    const HomographyFit fit = estimate_homography_ransac(m);
    CHECK(fit.inlier_count == 20);
    for (int i = 0; i < 25; ++i) CHECK(fit.inliers[i] == (i < 20));
    for (int x = 0; x <= 400; x += 50) {
      for (int y = 0; y <= 300; y += 50) {
        const Point2 p(x, y);
        CHECK((apply_homography(fit.h, p) - apply_homography(truth, p)).norm() <= 1e-6);
      }
    }
    const HomographyFit again = estimate_homography_ransac(m);
    CHECK(again.inliers == fit.inliers);
    CHECK(again.h.matrix() == fit.h.matrix());
  }
  SUBCASE("collinear points") {
    std::vector<PointMatch> m;
    for (int i = 0; i < 8; ++i) m.push_back({Point2(i * 10, i * 5), Point2(i * 10 + 3, i * 5)});
    try {
      estimate_homography(m);
      FAIL("expected estimation-failure");
    } catch (const StitchError& e) {
      CHECK(e.code() == ErrorCode::kEstimationFailure);
    }
  }
  SUBCASE("too few matches") {
    std::vector<PointMatch> m{{Point2(0, 0), Point2(0, 0)}};
    CHECK_THROWS_AS(estimate_homography(m), StitchError);
  }
}

TEST_CASE("matches JSON ingestion") {
  SUBCASE("one point row") {
    const MatchSet s = parse_matches(R"({"points": [[1,2,3,4]], "lines": []})");
    REQUIRE(s.points.size() == 1);
    CHECK(s.points[0].p.isApprox(Point2(1, 2)));
    CHECK(s.points[0].q.isApprox(Point2(3, 4)));
  }
  SUBCASE("empty arrays") {
    const MatchSet s = parse_matches(R"({"points": [], "lines": []})");
    CHECK(s.points.empty());
    CHECK(s.lines.empty());
  }
  SUBCASE("malformed row") {
    try {
      parse_matches(R"({"points": [[1,2,3]], "lines": []})", std::nullopt, std::nullopt, "m.json");
      FAIL("expected ingestion-error");
    } catch (const StitchError& e) {
      CHECK(e.code() == ErrorCode::kIngestionError);
      CHECK(std::string(e.what()).find("points[0]") != std::string::npos);
    }
  }
  SUBCASE("out-of-bounds coordinate") {
    CHECK_THROWS_AS(parse_matches(R"({"points": [[1,2,300,4]]})", ImageBounds{100, 100}, ImageBounds{100, 100}),
                    StitchError);
  }
  SUBCASE("zero-length line") {
    CHECK_THROWS_AS(parse_matches(R"({"lines": [[1,1,1,1, 0,0,5,5]]})"), StitchError);
  }
  SUBCASE("not JSON") { CHECK_THROWS_AS(parse_matches("{points"), StitchError); }
  SUBCASE("save and load round trip") {
    const auto dir = testing::scratch_dir("matches_io");
    MatchSet s;
    s.points.push_back({Point2(1.0 / 3.0, 2), Point2(3, 4.125)});
    s.lines.push_back({LineSegment(0, 0, 10, 0.1), LineSegment(1, 1, 11, 1.7)});
    save_matches(dir / "m.json", s);
    const MatchSet back = load_matches(dir / "m.json");
    REQUIRE(back.points.size() == 1);
    CHECK(back.points[0].p == s.points[0].p);
    CHECK(back.lines[0].l_ref.end == s.lines[0].l_ref.end);
    CHECK_THROWS_AS(load_matches(dir / "missing.json"), StitchError);
  }
}
