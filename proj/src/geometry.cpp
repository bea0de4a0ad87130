#include "pstitch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pstitch {

double MeshGrid::vertex_x(int c) const {
  return origin.x() + std::min(c * cell_w, width);
}

double MeshGrid::vertex_y(int r) const {
  return origin.y() + std::min(r * cell_h, height);
}

bool MeshGrid::contains(const Point2& p, double slack) const {
  return p.allFinite() && p.x() >= origin.x() - slack && p.y() >= origin.y() - slack &&
         p.x() <= origin.x() + width + slack && p.y() <= origin.y() + height + slack;
}

MeshGrid build_mesh(double image_w, double image_h, double cell_size) {
  if (!(image_w > 0) || !(image_h > 0) || !(cell_size > 0)) {
    throw StitchError(ErrorCode::kInvalidArgument,
                      "mesh dimensions and cell size must be positive");
  }
  MeshGrid mesh;
  mesh.cols = static_cast<int>(std::ceil(image_w / cell_size));
  mesh.rows = static_cast<int>(std::ceil(image_h / cell_size));
  mesh.cell_w = cell_size;
  mesh.cell_h = cell_size;
  mesh.width = image_w;
  mesh.height = image_h;
  return mesh;
}

MeshVertexVector original_vertices(const MeshGrid& mesh) {
  MeshVertexVector v(mesh.unknowns());
  for (int r = 0; r <= mesh.rows; ++r) {
    for (int c = 0; c <= mesh.cols; ++c) {
      const int i = mesh.vertex_index(r, c);
      v[2 * i] = mesh.vertex_x(c);
      v[2 * i + 1] = mesh.vertex_y(r);
    }
  }
  return v;
}

MeshVertexVector map_vertices(const MeshGrid& mesh, const Homography& h) {
  MeshVertexVector v = original_vertices(mesh);
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const Point2 q = apply_homography(h, vertex_at(v, i));
    v[2 * i] = q.x();
    v[2 * i + 1] = q.y();
  }
  return v;
}

BilinearAnchor bilinear_anchor(const MeshGrid& mesh, const Point2& p) {
  if (!mesh.contains(p)) {
    std::ostringstream msg;
    msg << "point (" << p.x() << ", " << p.y() << ") lies outside the mesh";
    throw StitchError(ErrorCode::kOutOfBounds, msg.str());
  }
  const Point2 local = p - mesh.origin;
  const int col = std::clamp(static_cast<int>(std::floor(local.x() / mesh.cell_w)), 0, mesh.cols - 1);
  const int row = std::clamp(static_cast<int>(std::floor(local.y() / mesh.cell_h)), 0, mesh.rows - 1);

  const double x0 = mesh.vertex_x(col);
  const double x1 = mesh.vertex_x(col + 1);
  const double y0 = mesh.vertex_y(row);
  const double y1 = mesh.vertex_y(row + 1);
  const double u = std::clamp((p.x() - x0) / (x1 - x0), 0.0, 1.0);
  const double v = std::clamp((p.y() - y0) / (y1 - y0), 0.0, 1.0);

  BilinearAnchor a;
  a.row = row;
  a.col = col;
  a.mesh_vertex_count = mesh.vertex_count();
  a.vertices = {mesh.vertex_index(row, col), mesh.vertex_index(row, col + 1),
                mesh.vertex_index(row + 1, col), mesh.vertex_index(row + 1, col + 1)};
  a.weights = {(1 - u) * (1 - v), u * (1 - v), (1 - u) * v, u * v};
  return a;
}

Point2 apply_anchor(const BilinearAnchor& a, const MeshVertexVector& v) {
  if (a.mesh_vertex_count <= 0 || v.size() != 2 * static_cast<Eigen::Index>(a.mesh_vertex_count)) {
    throw StitchError(ErrorCode::kInvalidArgument,
                      "vertex vector does not belong to the anchor's mesh");
  }
  Point2 out = Point2::Zero();
  for (int k = 0; k < 4; ++k) {
    out += a.weights[k] * vertex_at(v, a.vertices[k]);
  }
  return out;
}

}  // namespace pstitch
