#pragma once

#include <Eigen/Sparse>

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "pstitch/features.hpp"
#include "pstitch/geometry.hpp"
#include "pstitch/plane.hpp"

namespace pstitch {

/// One quadratic penalty of the total mesh energy.
enum class Term {
  kPlanarDistance,      // second differences along constraint lines
  kPlanarAngle,         // sub-segments stay perpendicular to the line normal
  kPointAlignment,      // matched points land on their reference positions
  kLineAlignment,       // target line samples land on the reference line
  kGlobalHorizontal,    // horizontal grid edges follow the pre-warp
  kOverlapVertical,     // vertical grid edges in the overlap follow the pre-warp
  kNonOverlapVertical,  // vertical grid edges outside the overlap stay upright
  kLocalLine,           // collinearity of matched lines in the overlap
  kGlobalLine,          // collinearity of long lines
};

inline constexpr std::array<Term, 9> kAllTerms = {
    Term::kPlanarDistance,   Term::kPlanarAngle,     Term::kPointAlignment,
    Term::kLineAlignment,    Term::kGlobalHorizontal, Term::kOverlapVertical,
    Term::kNonOverlapVertical, Term::kLocalLine,     Term::kGlobalLine};

/// Short name: sd, sa, p, l, gh, ov, nv, ll, gl.
std::string_view term_name(Term term);

struct EnergyWeights {
  double point = 1.0;
  double sd = 5.0;
  double sa = 10.0;
  double line = 5.0;
  double gh = 50.0;
  double ov = 50.0;
  double nv = 100.0;
  double ll = 30.0;
  double gl = 70.0;

  double of(Term term) const;
  EnergyWeights scaled(double factor) const;
};

struct SparseEntry {
  int col = 0;
  double value = 0;
};

/// Rows W and right-hand side b of one energy term ||W v - b||^2 over the
/// 2n mesh unknowns. Rows are stored unweighted; assemble() applies sqrt(lambda).
class LinearResidualBlock {
 public:
  LinearResidualBlock(Term term, int unknowns) : term_(term), unknowns_(unknowns) {}

  Term term() const { return term_; }
  int unknowns() const { return unknowns_; }
  int rows() const { return static_cast<int>(rhs_.size()); }
  bool empty() const { return rhs_.empty(); }

  /// Merges duplicate columns and drops the row if every coefficient cancels.
  /// Returns whether a row was appended.
  bool add_row(std::vector<SparseEntry> entries, double rhs);

  const std::vector<Eigen::Triplet<double>>& triplets() const { return triplets_; }
  Eigen::VectorXd rhs() const;
  Eigen::SparseMatrix<double> matrix() const;

  /// Unweighted residual W v - b.
  Eigen::VectorXd residual(const MeshVertexVector& v) const;
  /// Unweighted energy ||W v - b||^2.
  double energy(const MeshVertexVector& v) const { return residual(v).squaredNorm(); }

  /// Inputs that produced no rows (outside the mesh, degenerate geometry).
  int skipped = 0;

 private:
  Term term_;
  int unknowns_;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<double> rhs_;
};

/// Optional homography whose image of each line supplies the reference normal;
/// when empty, the line's own (target-frame) normal is used.
using NormalMap = std::optional<Homography>;

LinearResidualBlock build_planar_distance(const std::vector<SampledLine>& lines, int unknowns);
LinearResidualBlock build_planar_angle(const std::vector<SampledLine>& lines, int unknowns,
                                       const NormalMap& normal_map = std::nullopt);
LinearResidualBlock build_point_alignment(const std::vector<PointMatch>& matches, const MeshGrid& mesh);
LinearResidualBlock build_line_alignment(const std::vector<LineMatch>& matches, const MeshGrid& mesh,
                                         double spacing);

/// Per-cell overlap flags, row-major (r * cols + c): the cell's pre-warped
/// centre lies inside the reference frame.
std::vector<bool> overlap_mask(const MeshGrid& mesh, const MeshVertexVector& prewarp,
                               const ImageBounds& reference);

struct DistortionBlocks {
  LinearResidualBlock gh;
  LinearResidualBlock ov;
  LinearResidualBlock nv;
};

/// Grid-line terms relative to the pre-warped mesh. A vertical edge counts as
/// overlap when either adjacent cell is overlap.
DistortionBlocks build_distortion(const MeshGrid& mesh, const MeshVertexVector& prewarp,
                                  const std::vector<bool>& overlap);

struct LinePreservationBlocks {
  LinearResidualBlock ll;
  LinearResidualBlock gl;
};

LinePreservationBlocks build_line_preservation(const std::vector<SampledLine>& local_lines,
                                               const std::vector<SampledLine>& global_lines, int unknowns,
                                               const NormalMap& normal_map = std::nullopt);

struct LineClasses {
  std::vector<LineSegment> local;
  std::vector<LineSegment> global;
};

/// Global lines: detected lines at least length_ratio times the mean detected
/// length, or touching both overlap and non-overlap cells. Local lines: the
/// remaining matched target lines that touch the overlap.
LineClasses classify_lines(const std::vector<LineSegment>& detected, const std::vector<LineSegment>& matched,
                           const MeshGrid& mesh, const std::vector<bool>& overlap, double length_ratio);

struct EnergyAssembly {
  std::vector<LinearResidualBlock> blocks;
  std::vector<double> block_weights;
  MeshGrid mesh;
  MeshVertexVector prewarp;
  Eigen::SparseMatrix<double> a;
  Eigen::VectorXd b;

  /// Weighted total ||A v - b||^2.
  double total_energy(const MeshVertexVector& v) const { return (a * v - b).squaredNorm(); }
  const LinearResidualBlock* find(Term term) const;
};

/// Scales each block by sqrt(lambda) and stacks the rows in block order.
/// Blocks whose weight is zero are dropped. Throws invalid-argument when no
/// point-alignment block is present.
EnergyAssembly assemble(const std::vector<LinearResidualBlock>& blocks, const EnergyWeights& weights,
                        const MeshGrid& mesh, const MeshVertexVector& prewarp);

struct SolverOptions {
  /// Estimated factorization footprint above which conjugate gradients is used.
  std::size_t factorization_memory_cap = std::size_t{1} << 30;
  double cg_tolerance = 1e-10;
};

struct SolveResult {
  MeshVertexVector vertices;
  bool iterative = false;
  int iterations = 0;
  /// ||A^T (A v - b)|| / ||A^T b|| (absolute value when A^T b = 0).
  double relative_gradient = 0;
};

/// Least-squares minimizer of ||A v - b||^2 via the normal equations.
/// Throws solver-failure naming unconstrained vertices or reporting rank deficiency.
SolveResult solve(const EnergyAssembly& assembly, const SolverOptions& options = {});

/// Writes "rows cols nnz" then one "i j value" line per entry, then one
/// "b i value" line per right-hand-side entry.
void write_system(const std::filesystem::path& path, const EnergyAssembly& assembly);

}  // namespace pstitch
