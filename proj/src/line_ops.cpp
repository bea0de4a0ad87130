#include "pstitch/line_ops.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <numbers>

namespace pstitch {
namespace {

class GroupTest {
 public:
  GroupTest(const std::vector<LineSegment>& segments, const ConnectionParams& params)
      : segments_(segments), params_(params) {
    angles_.reserve(segments.size());
    for (const LineSegment& s : segments) angles_.push_back(s.angle());
  }

  // Whether the union of two member lists forms one connected, collinear group.
  bool compatible(const std::vector<int>& a, const std::vector<int>& b) const {
    bool near = false;
    for (const int i : a) {
      for (const int j : b) {
        if (angle_distance(angles_[i], angles_[j]) >= params_.slope_tol) return false;
        if (endpoint_gap(segments_[i], segments_[j]) < params_.dist_tol) near = true;
      }
    }
    if (!near) return false;
    std::vector<LineSegment> members;
    for (const int i : a) members.push_back(segments_[i]);
    for (const int j : b) members.push_back(segments_[j]);
    const double merged = merge_group(members).angle();
    auto within = [&](int i) { return angle_distance(merged, angles_[i]) < params_.slope_tol; };
    return std::all_of(a.begin(), a.end(), within) && std::all_of(b.begin(), b.end(), within);
  }

 private:
  const std::vector<LineSegment>& segments_;
  const ConnectionParams& params_;
  std::vector<double> angles_;
};

}  // namespace

LineSegment merge_group(const std::vector<LineSegment>& group) {
  if (group.empty()) {
    throw StitchError(ErrorCode::kInvalidArgument, "cannot merge an empty group");
  }
  if (group.size() == 1) return group.front();

  Point2 centroid = Point2::Zero();
  for (const LineSegment& s : group) centroid += s.start + s.end;
  centroid /= 2.0 * static_cast<double>(group.size());
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (const LineSegment& s : group) {
    scatter += (s.start - centroid) * (s.start - centroid).transpose();
    scatter += (s.end - centroid) * (s.end - centroid).transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
  Point2 axis = eig.eigenvectors().col(1);
  if (axis.dot(group.front().vector()) < 0) axis = -axis;

  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -std::numeric_limits<double>::infinity();
  for (const LineSegment& s : group) {
    for (const Point2& p : {s.start, s.end}) {
      const double t = (p - centroid).dot(axis);
      t_min = std::min(t_min, t);
      t_max = std::max(t_max, t);
    }
  }
  return {centroid + t_min * axis, centroid + t_max * axis};
}

LineGroupSet connect_segments(const std::vector<LineSegment>& segments, const ConnectionParams& params) {
  if (!(params.slope_tol > 0) || !(params.dist_tol > 0)) {
    throw StitchError(ErrorCode::kInvalidArgument, "connection tolerances must be positive");
  }
  const GroupTest test(segments, params);
  std::vector<std::vector<int>> groups;

  for (int i = 0; i < static_cast<int>(segments.size()); ++i) {
    bool used = false;
    for (auto& g : groups) {
      if (test.compatible(g, {i})) {
        g.push_back(i);
        used = true;
        break;
      }
    }
    if (!used) groups.push_back({i});
  }

  // a segment visited early may bridge two groups that only became adjacent later
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t a = 0; a < groups.size(); ++a) {
      for (std::size_t b = a + 1; b < groups.size();) {
        if (test.compatible(groups[a], groups[b])) {
          groups[a].insert(groups[a].end(), groups[b].begin(), groups[b].end());
          groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(b));
          changed = true;
        } else {
          ++b;
        }
      }
    }
  }

  LineGroupSet out;
  out.group_of.assign(segments.size(), -1);
  for (auto& g : groups) {
    std::sort(g.begin(), g.end());
    std::vector<LineSegment> members;
    for (const int i : g) {
      out.group_of[i] = static_cast<int>(out.groups.size());
      members.push_back(segments[i]);
    }
    out.merged.push_back(merge_group(members));
    out.groups.push_back(g);
  }
  return out;
}

std::vector<LineMatch> connect_line_matches(const std::vector<LineMatch>& matches,
                                            const ConnectionParams& params) {
  if (matches.empty()) return {};
  std::vector<LineSegment> targets;
  for (const LineMatch& m : matches) targets.push_back(m.l);
  const LineGroupSet groups = connect_segments(targets, params);
  std::vector<LineMatch> out;
  for (std::size_t g = 0; g < groups.groups.size(); ++g) {
    std::vector<LineSegment> refs;
    for (const int i : groups.groups[g]) refs.push_back(matches[i].l_ref);
    out.push_back({groups.merged[g], merge_group(refs)});
  }
  return out;
}

std::vector<PointMatch> extend_point_matches(const std::vector<LineMatch>& line_matches,
                                             const ImageBounds& target, const ImageBounds& reference,
                                             const ExtensionParams& params) {
  const double min_angle = params.min_angle_deg * std::numbers::pi / 180.0;
  std::vector<PointMatch> out;
  const int n = static_cast<int>(line_matches.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const LineMatch& a = line_matches[i];
      const LineMatch& b = line_matches[j];
      if (angle_distance(a.l.angle(), b.l.angle()) < min_angle) continue;
      if (angle_distance(a.l_ref.angle(), b.l_ref.angle()) < min_angle) continue;
      Point2 p, q;
      try {
        p = intersect_lines(a.l, b.l);
        q = intersect_lines(a.l_ref, b.l_ref);
      } catch (const StitchError&) {
        continue;
      }
      if (!target.contains(p, params.padding) || !reference.contains(q, params.padding)) continue;
      out.push_back({p, q, MatchOrigin::kExtended});
    }
  }
  return dedup_points(out, params.dedup_radius);
}

std::vector<PointMatch> filter_extended(const std::vector<PointMatch>& extended, const Homography& h0,
                                        double threshold) {
  std::vector<PointMatch> out;
  for (const PointMatch& m : extended) {
    try {
      if ((apply_homography(h0, m.p) - m.q).norm() <= threshold) out.push_back(m);
    } catch (const StitchError&) {
    }
  }
  return out;
}

}  // namespace pstitch
