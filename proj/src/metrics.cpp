#include "pstitch/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace pstitch {
namespace {

constexpr double kMinLength = 1e-9;

void require_pairs(const std::vector<IndirectPair>& pairs) {
  if (pairs.empty()) throw StitchError(ErrorCode::kUndefinedMetric, "no indirect line pairs");
}

double sine_squared(const LineSegment& a, const LineSegment& b, bool normalize) {
  Point2 u = a.vector();
  Point2 v = b.vector();
  if (normalize) {
    u.normalize();
    v.normalize();
  }
  const double c = cross2<double>(u, v);
  return c * c;
}

}  // namespace

IndirectPairSet build_indirect_pairs(const std::vector<Point2>& points, const std::vector<LineSegment>& lines,
                                     const MeshWarp& warp, const PlanePolicy& policy) {
  IndirectPairSet out;
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    const Point2& p = points[i];
    if (!warp.mesh.contains(p)) continue;
    std::vector<int> chosen;
    for (const StarCandidate& c : walk_star_candidates(p, lines, policy)) {
      if (c.status == StarCandidateStatus::kCollinear) {
        ++out.excluded_degenerate;
      } else if (c.status == StarCandidateStatus::kAccepted) {
        chosen.push_back(c.line_index);
      }
    }
    std::sort(chosen.begin(), chosen.end());
    for (const int j : chosen) {
      const LineSegment& base = lines[j];
      if (!warp.mesh.contains(base)) continue;
      IndirectPair pair;
      pair.l1 = LineSegment(p, base.start);
      pair.l2 = LineSegment(p, base.end);
      const Point2 ph = warp.map(p);
      pair.l1_hat = LineSegment(ph, warp.map(base.start));
      pair.l2_hat = LineSegment(ph, warp.map(base.end));
      pair.point_index = i;
      pair.line_index = j;
      if (pair.l1.length() <= kMinLength || pair.l2.length() <= kMinLength ||
          pair.l1_hat.length() <= kMinLength || pair.l2_hat.length() <= kMinLength) {
        ++out.excluded_degenerate;
        continue;
      }
      out.pairs.push_back(pair);
    }
  }
  return out;
}

double d_dis(const std::vector<IndirectPair>& pairs) {
  require_pairs(pairs);
  double sum = 0;
  for (const IndirectPair& k : pairs) {
    const double before = k.l1.length() / k.l2.length();
    const double after = k.l1_hat.length() / k.l2_hat.length();
    sum += (before - after) * (before - after);
  }
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

double d_dir(const std::vector<IndirectPair>& pairs, bool normalize) {
  require_pairs(pairs);
  double sum = 0;
  for (const IndirectPair& k : pairs) {
    sum += std::abs(sine_squared(k.l1, k.l2, normalize) - sine_squared(k.l1_hat, k.l2_hat, normalize));
  }
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

double rmse(const std::vector<PointMatch>& matches, const MeshWarp& warp) {
  double sum = 0;
  int n = 0;
  for (const PointMatch& m : matches) {
    if (!warp.mesh.contains(m.p)) continue;
    sum += (warp.map(m.p) - m.q).squaredNorm();
    ++n;
  }
  if (n == 0) throw StitchError(ErrorCode::kUndefinedMetric, "no point matches on the mesh");
  return std::sqrt(sum / n);
}

MetricReport evaluate(const MatchSet& matches, const MeshWarp& warp, const PlanePolicy& policy,
                      bool d_dir_normalized) {
  MetricReport report;
  report.d_dir_normalized = d_dir_normalized;
  report.rmse = rmse(matches.points, warp);
  std::vector<Point2> points;
  std::vector<LineSegment> lines;
  for (const PointMatch& m : matches.points) points.push_back(m.p);
  for (const LineMatch& m : matches.lines) lines.push_back(m.l);
  IndirectPairSet set = build_indirect_pairs(points, lines, warp, policy);
  report.k = static_cast<int>(set.pairs.size());
  report.excluded_degenerate = set.excluded_degenerate;
  if (!set.pairs.empty()) {
    report.d_dis = d_dis(set.pairs);
    report.d_dir = d_dir(set.pairs, d_dir_normalized);
  }
  report.per_pair = std::move(set.pairs);
  return report;
}

}  // namespace pstitch
