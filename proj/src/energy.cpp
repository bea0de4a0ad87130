#include "pstitch/energy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pstitch {
namespace {

void add_anchor(std::vector<SparseEntry>& row, const BilinearAnchor& a, double coef, int component) {
  for (int k = 0; k < 4; ++k) {
    row.push_back({2 * a.vertices[k] + component, coef * a.weights[k]});
  }
}

Point2 reference_normal(const SampledLine& line, const NormalMap& normal_map) {
  if (!normal_map) return line.normal;
  const LineSegment mapped = apply_homography(*normal_map, line.source);
  return mapped.normal();
}

}  // namespace

std::string_view term_name(Term term) {
  switch (term) {
    case Term::kPlanarDistance: return "sd";
    case Term::kPlanarAngle: return "sa";
    case Term::kPointAlignment: return "p";
    case Term::kLineAlignment: return "l";
    case Term::kGlobalHorizontal: return "gh";
    case Term::kOverlapVertical: return "ov";
    case Term::kNonOverlapVertical: return "nv";
    case Term::kLocalLine: return "ll";
    case Term::kGlobalLine: return "gl";
  }
  return "?";
}

double EnergyWeights::of(Term term) const {
  switch (term) {
    case Term::kPlanarDistance: return sd;
    case Term::kPlanarAngle: return sa;
    case Term::kPointAlignment: return point;
    case Term::kLineAlignment: return line;
    case Term::kGlobalHorizontal: return gh;
    case Term::kOverlapVertical: return ov;
    case Term::kNonOverlapVertical: return nv;
    case Term::kLocalLine: return ll;
    case Term::kGlobalLine: return gl;
  }
  return 0;
}

EnergyWeights EnergyWeights::scaled(double factor) const {
  EnergyWeights w = *this;
  for (double* v : {&w.point, &w.sd, &w.sa, &w.line, &w.gh, &w.ov, &w.nv, &w.ll, &w.gl}) *v *= factor;
  return w;
}

bool LinearResidualBlock::add_row(std::vector<SparseEntry> entries, double rhs) {
  double scale = 0;
  for (const SparseEntry& e : entries) {
    if (e.col < 0 || e.col >= unknowns_) {
      throw StitchError(ErrorCode::kInvalidArgument,
                        "residual row references unknown " + std::to_string(e.col));
    }
    scale = std::max(scale, std::abs(e.value));
  }
  std::sort(entries.begin(), entries.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.col < b.col; });
  std::vector<SparseEntry> merged;
  for (const SparseEntry& e : entries) {
    if (!merged.empty() && merged.back().col == e.col) {
      merged.back().value += e.value;
    } else {
      merged.push_back(e);
    }
  }
  const double cutoff = 1e-12 * scale;
  std::erase_if(merged, [&](const SparseEntry& e) { return std::abs(e.value) <= cutoff; });
  if (merged.empty()) return false;
  const int row = rows();
  for (const SparseEntry& e : merged) triplets_.emplace_back(row, e.col, e.value);
  rhs_.push_back(rhs);
  return true;
}

Eigen::VectorXd LinearResidualBlock::rhs() const {
  return Eigen::Map<const Eigen::VectorXd>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
}

Eigen::SparseMatrix<double> LinearResidualBlock::matrix() const {
  Eigen::SparseMatrix<double> m(rows(), unknowns_);
  m.setFromTriplets(triplets_.begin(), triplets_.end());
  return m;
}

Eigen::VectorXd LinearResidualBlock::residual(const MeshVertexVector& v) const {
  if (v.size() != unknowns_) {
    throw StitchError(ErrorCode::kInvalidArgument, "vertex vector size does not match the block");
  }
  Eigen::VectorXd r = -rhs();
  for (const auto& t : triplets_) r[t.row()] += t.value() * v[t.col()];
  return r;
}

LinearResidualBlock build_planar_distance(const std::vector<SampledLine>& lines, int unknowns) {
  LinearResidualBlock block(Term::kPlanarDistance, unknowns);
  for (const SampledLine& line : lines) {
    for (int j = 0; j + 2 < line.size(); ++j) {
      for (int comp = 0; comp < 2; ++comp) {
        std::vector<SparseEntry> row;
        add_anchor(row, line.anchors[j], 1.0, comp);
        add_anchor(row, line.anchors[j + 2], 1.0, comp);
        add_anchor(row, line.anchors[j + 1], -2.0, comp);
        block.add_row(std::move(row), 0.0);
      }
    }
  }
  return block;
}

LinearResidualBlock build_planar_angle(const std::vector<SampledLine>& lines, int unknowns,
                                       const NormalMap& normal_map) {
  LinearResidualBlock block(Term::kPlanarAngle, unknowns);
  for (const SampledLine& line : lines) {
    const Point2 n = reference_normal(line, normal_map);
    for (int j = 0; j + 1 < line.size(); ++j) {
      std::vector<SparseEntry> row;
      for (int comp = 0; comp < 2; ++comp) {
        add_anchor(row, line.anchors[j + 1], n[comp], comp);
        add_anchor(row, line.anchors[j], -n[comp], comp);
      }
      block.add_row(std::move(row), 0.0);
    }
  }
  return block;
}

LinearResidualBlock build_point_alignment(const std::vector<PointMatch>& matches, const MeshGrid& mesh) {
  LinearResidualBlock block(Term::kPointAlignment, mesh.unknowns());
  for (const PointMatch& m : matches) {
    if (!mesh.contains(m.p) || !m.q.allFinite()) {
      ++block.skipped;
      continue;
    }
    const BilinearAnchor a = bilinear_anchor(mesh, m.p);
    for (int comp = 0; comp < 2; ++comp) {
      std::vector<SparseEntry> row;
      add_anchor(row, a, 1.0, comp);
      block.add_row(std::move(row), m.q[comp]);
    }
  }
  return block;
}

LinearResidualBlock build_line_alignment(const std::vector<LineMatch>& matches, const MeshGrid& mesh,
                                         double spacing) {
  LinearResidualBlock block(Term::kLineAlignment, mesh.unknowns());
  for (const LineMatch& m : matches) {
    if (!(m.l_ref.length() > 1e-12) || !(m.l.length() > 0) || !mesh.contains(m.l)) {
      ++block.skipped;
      continue;
    }
    // a x + b y + c = 0 with a^2 + b^2 = 1
    const Point2 n = m.l_ref.normal();
    const double c = -n.dot(m.l_ref.start);
    const SampledLine line = sample_line(m.l, spacing, mesh);
    for (const BilinearAnchor& a : line.anchors) {
      std::vector<SparseEntry> row;
      add_anchor(row, a, n.x(), 0);
      add_anchor(row, a, n.y(), 1);
      block.add_row(std::move(row), -c);
    }
  }
  return block;
}

std::vector<bool> overlap_mask(const MeshGrid& mesh, const MeshVertexVector& prewarp,
                               const ImageBounds& reference) {
  std::vector<bool> mask(static_cast<std::size_t>(mesh.cell_count()), false);
  for (int r = 0; r < mesh.rows; ++r) {
    for (int c = 0; c < mesh.cols; ++c) {
      const Point2 center = 0.25 * (vertex_at(prewarp, mesh.vertex_index(r, c)) +
                                    vertex_at(prewarp, mesh.vertex_index(r, c + 1)) +
                                    vertex_at(prewarp, mesh.vertex_index(r + 1, c)) +
                                    vertex_at(prewarp, mesh.vertex_index(r + 1, c + 1)));
      mask[static_cast<std::size_t>(r) * mesh.cols + c] = reference.contains(center);
    }
  }
  return mask;
}

DistortionBlocks build_distortion(const MeshGrid& mesh, const MeshVertexVector& prewarp,
                                  const std::vector<bool>& overlap) {
  if (prewarp.size() != mesh.unknowns() || overlap.size() != static_cast<std::size_t>(mesh.cell_count())) {
    throw StitchError(ErrorCode::kInvalidArgument, "pre-warp or overlap mask does not match the mesh");
  }
  const int n = mesh.unknowns();
  DistortionBlocks out{LinearResidualBlock(Term::kGlobalHorizontal, n),
                       LinearResidualBlock(Term::kOverlapVertical, n),
                       LinearResidualBlock(Term::kNonOverlapVertical, n)};

  auto edge_row = [&](LinearResidualBlock& block, int from, int to, int comp, double rhs) {
    block.add_row({{2 * to + comp, 1.0}, {2 * from + comp, -1.0}}, rhs);
  };
  auto prewarp_delta = [&](int from, int to, int comp) {
    return prewarp[2 * to + comp] - prewarp[2 * from + comp];
  };

  for (int r = 0; r <= mesh.rows; ++r) {
    for (int c = 0; c < mesh.cols; ++c) {
      const int left = mesh.vertex_index(r, c);
      const int right = mesh.vertex_index(r, c + 1);
      for (int comp = 0; comp < 2; ++comp) {
        edge_row(out.gh, left, right, comp, prewarp_delta(left, right, comp));
      }
    }
  }
  for (int r = 0; r < mesh.rows; ++r) {
    for (int c = 0; c <= mesh.cols; ++c) {
      const bool left_cell = c > 0 && overlap[static_cast<std::size_t>(r) * mesh.cols + c - 1];
      const bool right_cell = c < mesh.cols && overlap[static_cast<std::size_t>(r) * mesh.cols + c];
      const int above = mesh.vertex_index(r, c);
      const int below = mesh.vertex_index(r + 1, c);
      if (left_cell || right_cell) {
        edge_row(out.ov, above, below, 0, prewarp_delta(above, below, 0));
        edge_row(out.ov, above, below, 1, prewarp_delta(above, below, 1));
      } else {
        edge_row(out.nv, above, below, 0, 0.0);
        edge_row(out.nv, above, below, 1, prewarp_delta(above, below, 1));
      }
    }
  }
  return out;
}

LinePreservationBlocks build_line_preservation(const std::vector<SampledLine>& local_lines,
                                               const std::vector<SampledLine>& global_lines, int unknowns,
                                               const NormalMap& normal_map) {
  auto build = [&](Term term, const std::vector<SampledLine>& lines) {
    LinearResidualBlock block(term, unknowns);
    for (const SampledLine& line : lines) {
      const Point2 n = reference_normal(line, normal_map);
      for (int j = 1; j < line.size(); ++j) {
        std::vector<SparseEntry> row;
        for (int comp = 0; comp < 2; ++comp) {
          add_anchor(row, line.anchors[j], n[comp], comp);
          add_anchor(row, line.anchors[0], -n[comp], comp);
        }
        block.add_row(std::move(row), 0.0);
      }
    }
    return block;
  };
  return {build(Term::kLocalLine, local_lines), build(Term::kGlobalLine, global_lines)};
}

LineClasses classify_lines(const std::vector<LineSegment>& detected, const std::vector<LineSegment>& matched,
                           const MeshGrid& mesh, const std::vector<bool>& overlap, double length_ratio) {
  struct Touch {
    bool overlap = false;
    bool outside = false;
  };
  auto touches = [&](const LineSegment& s) {
    Touch t;
    const double step = 0.25 * std::min(mesh.cell_w, mesh.cell_h);
    const int steps = std::max(1, static_cast<int>(std::ceil(s.length() / step)));
    for (int k = 0; k <= steps; ++k) {
      const BilinearAnchor a = bilinear_anchor(mesh, s.at(static_cast<double>(k) / steps));
      if (overlap[static_cast<std::size_t>(a.row) * mesh.cols + a.col]) {
        t.overlap = true;
      } else {
        t.outside = true;
      }
    }
    return t;
  };

  double mean = 0;
  for (const LineSegment& s : detected) mean += s.length();
  if (!detected.empty()) mean /= static_cast<double>(detected.size());

  LineClasses out;
  for (const LineSegment& s : dedup_segments(detected)) {
    if (!(s.length() > 0) || !mesh.contains(s)) continue;
    const Touch t = touches(s);
    if (s.length() >= length_ratio * mean || (t.overlap && t.outside)) out.global.push_back(s);
  }
  for (const LineSegment& s : dedup_segments(matched)) {
    if (!(s.length() > 0) || !mesh.contains(s)) continue;
    const bool is_global = std::any_of(out.global.begin(), out.global.end(),
                                       [&](const LineSegment& g) { return same_endpoints(g, s, 1.0); });
    if (!is_global && touches(s).overlap) out.local.push_back(s);
  }
  return out;
}

const LinearResidualBlock* EnergyAssembly::find(Term term) const {
  for (const LinearResidualBlock& b : blocks) {
    if (b.term() == term) return &b;
  }
  return nullptr;
}

EnergyAssembly assemble(const std::vector<LinearResidualBlock>& blocks, const EnergyWeights& weights,
                        const MeshGrid& mesh, const MeshVertexVector& prewarp) {
  if (blocks.empty()) throw StitchError(ErrorCode::kInvalidArgument, "no energy blocks to assemble");
  const bool has_points = std::any_of(blocks.begin(), blocks.end(), [](const LinearResidualBlock& b) {
    return b.term() == Term::kPointAlignment;
  });
  if (!has_points) throw StitchError(ErrorCode::kInvalidArgument, "point-alignment block is required");

  EnergyAssembly out;
  out.mesh = mesh;
  out.prewarp = prewarp;
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> rhs;
  for (const LinearResidualBlock& block : blocks) {
    if (block.unknowns() != mesh.unknowns()) {
      throw StitchError(ErrorCode::kInvalidArgument, "block does not match the mesh");
    }
    const double lambda = weights.of(block.term());
    if (lambda < 0) throw StitchError(ErrorCode::kInvalidArgument, "energy weights must be >= 0");
    if (lambda == 0) continue;
    const double s = std::sqrt(lambda);
    const int offset = static_cast<int>(rhs.size());
    for (const auto& t : block.triplets()) triplets.emplace_back(offset + t.row(), t.col(), s * t.value());
    const Eigen::VectorXd b = block.rhs();
    for (Eigen::Index i = 0; i < b.size(); ++i) rhs.push_back(s * b[i]);
    out.blocks.push_back(block);
    out.block_weights.push_back(lambda);
  }
  out.a.resize(static_cast<Eigen::Index>(rhs.size()), mesh.unknowns());
  out.a.setFromTriplets(triplets.begin(), triplets.end());
  out.b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  return out;
}

}  // namespace pstitch
