#pragma once

// Shared helpers for the test binaries: seeded generators and brute-force oracles.

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include "pstitch/energy.hpp"
#include "pstitch/geometry.hpp"
#include "pstitch/image.hpp"

namespace testing {

using pstitch::Point2;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform(0, 1) < p; }
  Point2 point(double w, double h) { return {uniform(0, w), uniform(0, h)}; }

  /// Rotation, anisotropic scale, shear and translation.
  Eigen::Matrix3d affine() {
    const double a = uniform(-std::numbers::pi, std::numbers::pi);
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    Eigen::Matrix2d r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    Eigen::Matrix2d s;
    s << uniform(0.5, 2.0), uniform(-0.5, 0.5), 0, uniform(0.5, 2.0);
    m.topLeftCorner<2, 2>() = r * s;
    m(0, 2) = uniform(-100, 100);
    m(1, 2) = uniform(-100, 100);
    return m;
  }

  /// Mild projective map that keeps a 1000 px frame in front of the camera.
  pstitch::Homography homography() {
    Eigen::Matrix3d m = affine();
    m(2, 0) = uniform(-2e-4, 2e-4);
    m(2, 1) = uniform(-2e-4, 2e-4);
    return pstitch::Homography(m);
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Minimizer of ||A v - b|| by dense column-pivoting QR, independent of the
/// sparse normal-equations path.
inline Eigen::VectorXd dense_least_squares(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b) {
  const Eigen::MatrixXd dense(a);
  return dense.colPivHouseholderQr().solve(b);
}

/// Direct projective warp of a gray image into a canvas: canvas pixel c shows
/// the target at h^-1(c - offset).
inline pstitch::Image direct_homography_warp(const pstitch::Image& target, const pstitch::Homography& h,
                                             int width, int height, const Point2& offset,
                                             pstitch::Mask* covered = nullptr) {
  const pstitch::Homography inv = h.inverse();
  pstitch::Image out(width, height, 3);
  if (covered) *covered = pstitch::Mask::Zero(height, width);
  const pstitch::Image src = pstitch::to_rgb(target);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Point2 p = pstitch::apply_homography(inv, Point2(Point2(x, y) - offset));
      if (p.x() < 0 || p.y() < 0 || p.x() > target.width || p.y() > target.height) continue;
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(pstitch::sample_bilinear(src, p.x(), p.y(), c)));
      }
      if (covered) (*covered)(y, x) = 1;
    }
  }
  return out;
}

/// Scratch directory unique to one test name, emptied on creation.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pstitch_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
