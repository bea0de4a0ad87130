#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <fstream>
#include <iomanip>

#include "pstitch/energy.hpp"

namespace pstitch {
namespace {

// Rough fill-in model for a grid-structured normal matrix: each of the n
// unknowns keeps on the order of sqrt(n) nonzeros in the factor.
std::size_t estimated_factor_bytes(Eigen::Index n) {
  const double nd = static_cast<double>(n);
  return static_cast<std::size_t>(8.0 * 12.0 * nd * std::ceil(std::sqrt(nd)));
}

std::string describe_vertices(const std::vector<int>& vertices, const MeshGrid& mesh) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(vertices.size(), 8);
  for (std::size_t i = 0; i < shown; ++i) {
    const int v = vertices[i];
    if (!out.empty()) out += ", ";
    out += "(" + std::to_string(v / (mesh.cols + 1)) + "," + std::to_string(v % (mesh.cols + 1)) + ")";
  }
  if (vertices.size() > shown) out += ", ... (" + std::to_string(vertices.size()) + " total)";
  return out;
}

}  // namespace

SolveResult solve(const EnergyAssembly& assembly, const SolverOptions& options) {
  const Eigen::SparseMatrix<double>& a = assembly.a;
  const Eigen::Index n = a.cols();
  if (n != assembly.mesh.unknowns() || a.rows() != assembly.b.size()) {
    throw StitchError(ErrorCode::kInvalidArgument, "assembled system has inconsistent dimensions");
  }
  if (a.rows() == 0) throw StitchError(ErrorCode::kSolverFailure, "energy has no residual rows");

  Eigen::VectorXd column_norms = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < a.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
      column_norms[it.col()] += it.value() * it.value();
    }
  }
  std::vector<int> uncovered;
  for (int v = 0; v < assembly.mesh.vertex_count(); ++v) {
    if (column_norms[2 * v] == 0 || column_norms[2 * v + 1] == 0) uncovered.push_back(v);
  }
  if (!uncovered.empty()) {
    throw StitchError(ErrorCode::kSolverFailure,
                      "vertices without any constraint: " + describe_vertices(uncovered, assembly.mesh));
  }

  const Eigen::SparseMatrix<double> at = a.transpose();
  const Eigen::SparseMatrix<double> normal = at * a;
  const Eigen::VectorXd rhs = at * assembly.b;
  const double rhs_norm = rhs.norm();
  auto relative_gradient = [&](const Eigen::VectorXd& v) {
    const double g = (at * (a * v - assembly.b)).norm();
    return rhs_norm > 0 ? g / rhs_norm : g;
  };

  SolveResult result;
  if (estimated_factor_bytes(n) <= options.factorization_memory_cap) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(normal);
    if (ldlt.info() != Eigen::Success) {
      throw StitchError(ErrorCode::kSolverFailure, "factorization of the normal equations failed");
    }
    const Eigen::VectorXd d = ldlt.vectorD();
    const double d_max = d.cwiseAbs().maxCoeff();
    if (!(d_max > 0) || d.minCoeff() <= 1e-12 * d_max) {
      throw StitchError(ErrorCode::kSolverFailure, "normal equations are rank-deficient");
    }
    Eigen::VectorXd v = ldlt.solve(rhs);
    for (int step = 0; step < 2; ++step) v -= ldlt.solve(at * (a * v - assembly.b));
    result.vertices = v;
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg(normal);
    cg.setTolerance(options.cg_tolerance);
    cg.setMaxIterations(static_cast<Eigen::Index>(10 * n));
    const Eigen::VectorXd guess =
        assembly.prewarp.size() == n ? assembly.prewarp : Eigen::VectorXd(Eigen::VectorXd::Zero(n));
    result.vertices = cg.solveWithGuess(rhs, guess);
    result.iterative = true;
    result.iterations = static_cast<int>(cg.iterations());
    if (cg.info() != Eigen::Success) {
      throw StitchError(ErrorCode::kSolverFailure, "conjugate gradients did not converge");
    }
  }
  if (!result.vertices.allFinite()) {
    throw StitchError(ErrorCode::kSolverFailure, "solution is not finite");
  }
  result.relative_gradient = relative_gradient(result.vertices);
  return result;
}

void write_system(const std::filesystem::path& path, const EnergyAssembly& assembly) {
  std::ofstream out(path);
  if (!out) throw StitchError(ErrorCode::kIoError, "cannot write " + path.string());
  out << std::setprecision(17);
  out << assembly.a.rows() << ' ' << assembly.a.cols() << ' ' << assembly.a.nonZeros() << '\n';
  for (Eigen::Index k = 0; k < assembly.a.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(assembly.a, k); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
  for (Eigen::Index i = 0; i < assembly.b.size(); ++i) out << "b " << i << ' ' << assembly.b[i] << '\n';
  if (!out) throw StitchError(ErrorCode::kIoError, "failed while writing " + path.string());
}

}  // namespace pstitch
