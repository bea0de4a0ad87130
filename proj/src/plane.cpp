#include "pstitch/plane.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace pstitch {
namespace {

class SegmentIndex {
 public:
  explicit SegmentIndex(double tol) : tol_(tol), cell_(tol > 0 ? tol : 1.0) {}

  // Inserts s unless an equivalent segment is already present.
  bool insert(const LineSegment& s) {
    const auto [cx, cy] = cell_of(s.start);
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        const auto it = buckets_.find(key(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (const int k : it->second) {
          if (same_endpoints(kept_[k], s, tol_)) return false;
        }
      }
    }
    const int id = static_cast<int>(kept_.size());
    kept_.push_back(s);
    const auto a = cell_of(s.start);
    const auto b = cell_of(s.end);
    buckets_[key(a.first, a.second)].push_back(id);
    if (b != a) buckets_[key(b.first, b.second)].push_back(id);
    return true;
  }

  const std::vector<LineSegment>& kept() const { return kept_; }

 private:
  std::pair<long long, long long> cell_of(const Point2& p) const {
    return {static_cast<long long>(std::floor(p.x() / cell_)),
            static_cast<long long>(std::floor(p.y() / cell_))};
  }
  static long long key(long long x, long long y) { return (x << 32) ^ (y & 0xffffffffLL); }

  double tol_;
  double cell_;
  std::vector<LineSegment> kept_;
  std::unordered_map<long long, std::vector<int>> buckets_;
};

}  // namespace

std::vector<StarCandidate> walk_star_candidates(const Point2& apex, const std::vector<LineSegment>& lines,
                                                const PlanePolicy& policy) {
  std::vector<StarCandidate> ranked;
  ranked.reserve(lines.size());
  for (int i = 0; i < static_cast<int>(lines.size()); ++i) {
    ranked.push_back({i, lines[i].segment_distance(apex), StarCandidateStatus::kAccepted});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const StarCandidate& a, const StarCandidate& b) { return a.distance < b.distance; });

  std::vector<StarCandidate> out;
  int accepted = 0;
  for (StarCandidate c : ranked) {
    if (accepted >= policy.max_stars_per_point) break;
    const LineSegment& base = lines[c.line_index];
    if (!(base.length() > 0) || base.line_distance(apex) < policy.min_apex_distance) {
      c.status = StarCandidateStatus::kCollinear;
    } else if ((base.start - apex).norm() < policy.min_leg_length ||
               (base.end - apex).norm() < policy.min_leg_length) {
      c.status = StarCandidateStatus::kShortLeg;
    } else {
      ++accepted;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<PlaneStar> build_plane_stars(const std::vector<Point2>& points,
                                         const std::vector<LineSegment>& lines, const PlanePolicy& policy) {
  std::vector<PlaneStar> stars;
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    std::vector<int> chosen;
    for (const StarCandidate& c : walk_star_candidates(points[i], lines, policy)) {
      if (c.status == StarCandidateStatus::kAccepted) chosen.push_back(c.line_index);
    }
    std::sort(chosen.begin(), chosen.end());
    for (const int j : chosen) {
      PlaneStar s;
      s.apex = points[i];
      s.base = lines[j];
      s.legs = {LineSegment(points[i], lines[j].start), LineSegment(points[i], lines[j].end)};
      s.point_index = i;
      s.line_index = j;
      stars.push_back(s);
    }
  }
  return stars;
}

std::vector<PlaneStar> build_plane_stars(const std::vector<PointMatch>& points,
                                         const std::vector<LineMatch>& lines, const PlanePolicy& policy) {
  std::vector<Point2> p;
  std::vector<LineSegment> l;
  for (const PointMatch& m : points) p.push_back(m.p);
  for (const LineMatch& m : lines) l.push_back(m.l);
  return build_plane_stars(p, l, policy);
}

SampledLine sample_line(const LineSegment& seg, double spacing, const MeshGrid& mesh) {
  if (!(spacing > 0)) throw StitchError(ErrorCode::kInvalidArgument, "sample spacing must be positive");
  if (!(seg.length() > 0)) throw StitchError(ErrorCode::kInvalidArgument, "cannot sample a zero-length line");
  if (!mesh.contains(seg)) throw StitchError(ErrorCode::kOutOfBounds, "line leaves the mesh");
  const int m = std::max(3, static_cast<int>(std::ceil(seg.length() / spacing)) + 1);
  SampledLine out;
  out.source = seg;
  out.normal = seg.normal();
  out.samples.reserve(m);
  out.anchors.reserve(m);
  for (int k = 0; k < m; ++k) {
    const Point2 p = k == m - 1 ? seg.end : seg.at(static_cast<double>(k) / (m - 1));
    out.samples.push_back(p);
    out.anchors.push_back(bilinear_anchor(mesh, p));
  }
  return out;
}

std::vector<LineSegment> dedup_segments(const std::vector<LineSegment>& segments, double tol) {
  SegmentIndex index(tol);
  for (const LineSegment& s : segments) index.insert(s);
  return index.kept();
}

std::vector<SampledLine> collect_constraint_lines(const std::vector<PlaneStar>& stars,
                                                  const std::vector<LineSegment>& feature_lines,
                                                  const MeshGrid& mesh, double spacing) {
  std::vector<LineSegment> all;
  all.reserve(3 * stars.size() + feature_lines.size());
  for (const PlaneStar& s : stars) {
    all.push_back(s.legs[0]);
    all.push_back(s.legs[1]);
    all.push_back(s.base);
  }
  all.insert(all.end(), feature_lines.begin(), feature_lines.end());

  std::vector<SampledLine> out;
  for (const LineSegment& s : dedup_segments(all, 1.0)) {
    if (!(s.length() > 0) || !mesh.contains(s)) continue;
    out.push_back(sample_line(s, spacing, mesh));
  }
  return out;
}

}  // namespace pstitch
