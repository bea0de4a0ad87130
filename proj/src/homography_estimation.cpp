#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "pstitch/features.hpp"

namespace pstitch {
namespace {

// Similarity that moves the centroid to the origin and the mean distance to sqrt(2).
Eigen::Matrix3d normalizing_transform(const std::vector<Point2>& pts) {
  Point2 c = Point2::Zero();
  for (const Point2& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean = 0;
  for (const Point2& p : pts) mean += (p - c).norm();
  mean /= static_cast<double>(pts.size());
  const double s = mean > 0 ? std::sqrt(2.0) / mean : 1.0;
  Eigen::Matrix3d t;
  t << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return t;
}

// Smallest singular value relative to the largest of the centered point cloud.
bool collinear(const std::vector<Point2>& pts) {
  Point2 c = Point2::Zero();
  for (const Point2& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Point2& p : pts) cov += (p - c) * (p - c).transpose();
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(cov);
  const auto sv = svd.singularValues();
  return !(sv[0] > 0) || sv[1] <= 1e-12 * sv[0];
}

bool any_three_collinear(const std::array<Point2, 4>& p) {
  for (int i = 0; i < 4; ++i) {
    const Point2& a = p[(i + 1) % 4];
    const Point2& b = p[(i + 2) % 4];
    const Point2& c = p[(i + 3) % 4];
    const double scale = std::max({(b - a).squaredNorm(), (c - a).squaredNorm(), 1e-30});
    if (std::abs(cross2<double>(Point2(b - a), Point2(c - a))) <= 1e-9 * scale) return true;
  }
  return false;
}

// Returns false when the linear system does not pin down a unique solution.
bool solve_dlt(const std::vector<Point2>& src, const std::vector<Point2>& dst, Eigen::Matrix3d& out) {
  const Eigen::Matrix3d ts = normalizing_transform(src);
  const Eigen::Matrix3d td = normalizing_transform(dst);
  const Eigen::Index n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = ts * src[i].homogeneous();
    const Eigen::Vector3d q = td * dst[i].homogeneous();
    a.row(2 * i) << 0, 0, 0, -p.x(), -p.y(), -1, q.y() * p.x(), q.y() * p.y(), q.y();
    a.row(2 * i + 1) << p.x(), p.y(), 1, 0, 0, 0, -q.x() * p.x(), -q.x() * p.y(), -q.x();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv.size() < 8 || !(sv[0] > 0) || sv[7] <= 1e-10 * sv[0]) return false;
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  out = td.inverse() * hn * ts;
  return out.allFinite();
}

double transfer_error(const Eigen::Matrix3d& h, const PointMatch& m) {
  const Eigen::Vector3d q = h * m.p.homogeneous();
  if (std::abs(q.z()) < 1e-12) return std::numeric_limits<double>::infinity();
  return (q.hnormalized() - m.q).norm();
}

void split(const std::vector<PointMatch>& matches, std::vector<Point2>& src, std::vector<Point2>& dst) {
  src.clear();
  dst.clear();
  for (const PointMatch& m : matches) {
    src.push_back(m.p);
    dst.push_back(m.q);
  }
}

}  // namespace

Homography fit_homography_dlt(const std::vector<PointMatch>& matches) {
  if (matches.size() < 4) {
    throw StitchError(ErrorCode::kEstimationFailure, "homography needs at least 4 matches");
  }
  std::vector<Point2> src, dst;
  split(matches, src, dst);
  if (collinear(src) || collinear(dst)) {
    throw StitchError(ErrorCode::kEstimationFailure, "matched points are collinear");
  }
  Eigen::Matrix3d h;
  if (!solve_dlt(src, dst, h)) {
    throw StitchError(ErrorCode::kEstimationFailure, "degenerate point configuration");
  }
  try {
    return Homography(h);
  } catch (const StitchError& e) {
    throw StitchError(ErrorCode::kEstimationFailure, e.what());
  }
}

HomographyFit estimate_homography_ransac(const std::vector<PointMatch>& matches,
                                         const RansacParams& params) {
  const int n = static_cast<int>(matches.size());
  if (n < 4) {
    throw StitchError(ErrorCode::kEstimationFailure,
                      "homography needs at least 4 matches, got " + std::to_string(n));
  }
  {
    std::vector<Point2> src, dst;
    split(matches, src, dst);
    if (collinear(src) || collinear(dst)) {
      throw StitchError(ErrorCode::kEstimationFailure, "matched points are collinear");
    }
  }

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  int best_count = 0;
  double best_err = std::numeric_limits<double>::infinity();
  Eigen::Matrix3d best_h = Eigen::Matrix3d::Identity();
  long long needed = params.max_iterations;

  std::vector<Point2> src(4), dst(4);
  for (long long iter = 0; iter < needed && iter < params.max_iterations; ++iter) {
    std::array<int, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      int candidate;
      do {
        candidate = pick(rng);
      } while (std::find(idx.begin(), idx.begin() + k, candidate) != idx.begin() + k);
      idx[k] = candidate;
    }
    std::array<Point2, 4> ps, qs;
    for (int k = 0; k < 4; ++k) {
      ps[k] = matches[idx[k]].p;
      qs[k] = matches[idx[k]].q;
      src[k] = ps[k];
      dst[k] = qs[k];
    }
    if (any_three_collinear(ps) || any_three_collinear(qs)) continue;
    Eigen::Matrix3d h;
    if (!solve_dlt(src, dst, h)) continue;

    int count = 0;
    double err_sum = 0;
    for (const PointMatch& m : matches) {
      const double e = transfer_error(h, m);
      if (e <= params.inlier_threshold) {
        ++count;
        err_sum += e * e;
      }
    }
    if (count > best_count || (count == best_count && err_sum < best_err)) {
      best_count = count;
      best_err = err_sum;
      best_h = h;
      const double ratio = static_cast<double>(count) / n;
      const double denom = std::log(1.0 - std::pow(ratio, 4));
      if (ratio >= 1.0) {
        needed = iter + 1;
      } else if (denom < 0) {
        needed = static_cast<long long>(std::ceil(std::log(1.0 - params.confidence) / denom));
      }
    }
  }
  if (best_count < 4) {
    throw StitchError(ErrorCode::kEstimationFailure, "no consensus set of 4 or more matches");
  }

  // refit on the consensus set until the inlier set stops changing
  HomographyFit fit;
  Eigen::Matrix3d h = best_h;
  std::vector<bool> inliers(n, false);
  for (int round = 0; round < 5; ++round) {
    std::vector<bool> next(n, false);
    std::vector<Point2> is, id;
    for (int i = 0; i < n; ++i) {
      if (transfer_error(h, matches[i]) <= params.inlier_threshold) {
        next[i] = true;
        is.push_back(matches[i].p);
        id.push_back(matches[i].q);
      }
    }
    if (round > 0 && next == inliers) break;
    inliers = next;
    Eigen::Matrix3d refit;
    if (is.size() < 4 || collinear(is) || collinear(id) || !solve_dlt(is, id, refit)) break;
    h = refit;
  }
  try {
    fit.h = Homography(h);
  } catch (const StitchError& e) {
    throw StitchError(ErrorCode::kEstimationFailure, e.what());
  }
  fit.inliers.assign(n, false);
  for (int i = 0; i < n; ++i) {
    fit.inliers[i] = transfer_error(fit.h.matrix(), matches[i]) <= params.inlier_threshold;
    fit.inlier_count += fit.inliers[i] ? 1 : 0;
  }
  return fit;
}

}  // namespace pstitch
