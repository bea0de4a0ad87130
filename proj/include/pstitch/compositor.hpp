#pragma once

#include <Eigen/Core>

#include <vector>

#include "pstitch/geometry.hpp"
#include "pstitch/image.hpp"

namespace pstitch {

/// Output raster. A reference-frame point p lands at canvas pixel p + offset.
struct Canvas {
  int width = 0;
  int height = 0;
  Point2 offset = Point2::Zero();

  Point2 to_canvas(const Point2& p) const { return p + offset; }
  Point2 to_reference(const Point2& c) const { return c - offset; }
};

/// Integer-aligned bounding box of the reference rectangle [0,w]x[0,h] and
/// all deformed vertices.
Canvas compute_canvas(int reference_width, int reference_height, const MeshVertexVector& vertices);

/// Canvas image plus the pixels it covers.
struct Layer {
  Image image;
  Mask mask;
};

struct WarpResult {
  Layer layer;
  /// Cells whose deformed quad is folded or degenerate.
  int folded_cells = 0;
  std::vector<int> folded;  // row-major cell indices
};

/// Whether the deformed quad of cell (r, c) is strictly convex with positive
/// orientation (y pointing down).
bool quad_is_valid(const MeshGrid& mesh, const MeshVertexVector& vertices, int r, int c);

/// Inverse of the bilinear map of one quad (corners TL, TR, BL, BR).
/// Returns false when Newton iteration does not reach |residual| <= tol.
bool invert_bilinear(const std::array<Point2, 4>& quad, const Point2& p, Point2& uv, double tol = 1e-6);

/// Renders the target through the deformed mesh: every covered canvas pixel
/// is pulled back through its quad and sampled bilinearly. Pixels of folded
/// quads take their source position from the nearest valid cell.
WarpResult warp_image(const Image& target, const MeshGrid& mesh, const MeshVertexVector& vertices,
                      const Canvas& canvas);

/// Reference image copied onto the canvas at the canvas offset.
Layer place_reference(const Image& reference, const Canvas& canvas);

using WeightMap = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Euclidean distance from every set pixel to the nearest unset pixel,
/// treating everything beyond the raster as unset. Unset pixels get 0.
WeightMap distance_to_boundary(const Mask& mask);

/// Weight of the target layer at each pixel: 1 where only the target covers,
/// 0 where only the reference does, d_t / (d_t + d_r) in the overlap.
WeightMap feather_weights(const Mask& target, const Mask& reference);

/// Feathered composite of two canvas-aligned RGB layers.
Layer blend(const Layer& target, const Layer& reference);

}  // namespace pstitch
