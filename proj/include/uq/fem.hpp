#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "uq/coefficient.hpp"
#include "uq/mesh.hpp"

namespace uq {

/// Right-hand side f of -div(a grad u) = f.
class SourceTerm {
 public:
  SourceTerm(double constant = 1.0) : constant_(constant) {}  // NOLINT: implicit on purpose
  explicit SourceTerm(std::function<double(Point)> fn) : fn_(std::move(fn)) {}

  bool is_constant() const { return !fn_; }
  double constant() const { return constant_; }
  double operator()(Point p) const { return fn_ ? fn_(p) : constant_; }

 private:
  double constant_ = 1.0;
  std::function<double(Point)> fn_;
};

/// Stiffness system with homogeneous Dirichlet rows and columns eliminated.
struct SparseSystem {
  MeshPtr mesh;
  std::vector<double> element_coefficients;
  std::vector<int> dof_of_vertex;  // -1 on boundary vertices
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;

  Eigen::Index num_dofs() const { return rhs.size(); }
};

struct FESolution {
  MeshPtr mesh;
  std::vector<double> element_coefficients;
  Eigen::VectorXd nodal;  // one value per vertex, exactly 0 on the boundary
  int iterations = 0;
  double residual = 0.0;  // final ||b - Ax|| / ||b||
};

enum class SolverKind { cholesky, cg };

struct SolverOptions {
  SolverKind kind = SolverKind::cholesky;
  double rel_tol = 1e-10;
  int max_iterations = 0;  // cg only; 0 selects 20 * sqrt(#dofs)
};

/// Gradients of the three P1 basis functions on triangle t, in the order of
/// its vertices.
std::array<Point, 3> basis_gradients(const TriMesh& mesh, int t);

/// Gradient of the piecewise linear function with the given nodal values on t.
Point element_gradient(const TriMesh& mesh, int t, const Eigen::VectorXd& nodal);

SparseSystem assemble(MeshPtr mesh, std::vector<double> element_coefficients, const SourceTerm& f);
SparseSystem assemble(MeshPtr mesh, const CoefficientSample& coeff, const SourceTerm& f);

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Conjugate gradients, optionally with diagonal (Jacobi) preconditioning,
/// started from zero. Stops once ||b - Ax|| <= rel_tol * ||b||.
CgResult conjugate_gradient(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b,
                            bool jacobi, double rel_tol, int max_iterations);

/// Throws SolverError if the residual target is missed.
FESolution solve(const SparseSystem& system, const SolverOptions& options = {});

FESolution solve_pde(MeshPtr mesh, const CoefficientSample& coeff, const SourceTerm& f,
                     const SolverOptions& options = {});

/// Full H^1 norm (L^2 part plus gradient part), integrated exactly.
double h1_norm(const FESolution& sol);
double h1_norm(const TriMesh& mesh, const Eigen::VectorXd& nodal);
double l2_norm(const TriMesh& mesh, const Eigen::VectorXd& nodal);
double h1_seminorm(const TriMesh& mesh, const Eigen::VectorXd& nodal);

/// sqrt(sum_K a_K int_K |grad v|^2).
double energy_norm(const TriMesh& mesh, const Eigen::VectorXd& nodal,
                   std::span<const double> element_coefficients);
double energy_norm(const FESolution& sol);

}  // namespace uq
