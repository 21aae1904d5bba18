#include "uq/fem.hpp"

#include <cmath>
#include <string>

#include <Eigen/SparseCholesky>

#include "uq/error.hpp"

namespace uq {

namespace {

constexpr double kDegenerateArea = 1e-15;

}  // namespace

std::array<Point, 3> basis_gradients(const TriMesh& mesh, int t) {
  const auto& tri = mesh.triangle(t);
  const Point& p0 = mesh.vertex(tri[0]);
  const Point& p1 = mesh.vertex(tri[1]);
  const Point& p2 = mesh.vertex(tri[2]);
  const double two_area = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  return {Point{(p1.y - p2.y) / two_area, (p2.x - p1.x) / two_area},
          Point{(p2.y - p0.y) / two_area, (p0.x - p2.x) / two_area},
          Point{(p0.y - p1.y) / two_area, (p1.x - p0.x) / two_area}};
}

Point element_gradient(const TriMesh& mesh, int t, const Eigen::VectorXd& nodal) {
  const auto grads = basis_gradients(mesh, t);
  const auto& tri = mesh.triangle(t);
  Point g;
  for (int i = 0; i < 3; ++i) {
    g.x += nodal[tri[i]] * grads[i].x;
    g.y += nodal[tri[i]] * grads[i].y;
  }
  return g;
}

SparseSystem assemble(MeshPtr mesh, std::vector<double> element_coefficients, const SourceTerm& f) {
  const TriMesh& m = *mesh;
  if (element_coefficients.size() != m.num_triangles())
    throw std::invalid_argument("assemble: one coefficient per triangle required");

  SparseSystem sys;
  sys.dof_of_vertex.assign(m.num_vertices(), -1);
  int ndofs = 0;
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    if (!m.is_boundary_vertex(static_cast<int>(v))) sys.dof_of_vertex[v] = ndofs++;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * m.num_triangles());
  sys.rhs = Eigen::VectorXd::Zero(ndofs);
  for (std::size_t k = 0; k < m.num_triangles(); ++k) {
    const int t = static_cast<int>(k);
    const double area = m.area(t);
    if (!(area > kDegenerateArea))
      throw AssemblyError("assemble: degenerate triangle " + std::to_string(t));
    const auto& tri = m.triangle(t);
    const auto grads = basis_gradients(m, t);
    const double a = element_coefficients[k];

    std::array<double, 3> load{};
    if (f.is_constant()) {
      load.fill(f.constant() * area / 3.0);
    } else {
      // Edge-midpoint rule; phi_i is 1/2 at the two midpoints adjacent to vertex i.
      std::array<double, 3> fm{};  // f at the midpoint opposite vertex i
      for (int i = 0; i < 3; ++i) {
        const Point& p = m.vertex(tri[(i + 1) % 3]);
        const Point& q = m.vertex(tri[(i + 2) % 3]);
        fm[i] = f({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)});
      }
      for (int i = 0; i < 3; ++i) load[i] = area / 6.0 * (fm[(i + 1) % 3] + fm[(i + 2) % 3]);
    }

    for (int i = 0; i < 3; ++i) {
      const int di = sys.dof_of_vertex[tri[i]];
      if (di < 0) continue;
      sys.rhs[di] += load[i];
      for (int j = 0; j < 3; ++j) {
        const int dj = sys.dof_of_vertex[tri[j]];
        if (dj < 0) continue;
        const double kij = a * area * (grads[i].x * grads[j].x + grads[i].y * grads[j].y);
        triplets.emplace_back(di, dj, kij);
      }
    }
  }
  sys.matrix.resize(ndofs, ndofs);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.mesh = std::move(mesh);
  sys.element_coefficients = std::move(element_coefficients);
  return sys;
}

SparseSystem assemble(MeshPtr mesh, const CoefficientSample& coeff, const SourceTerm& f) {
  auto a = element_values(coeff, *mesh);
  return assemble(std::move(mesh), std::move(a), f);
}

CgResult conjugate_gradient(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b,
                            bool jacobi, double rel_tol, int max_iterations) {
  const Eigen::Index n = b.size();
  CgResult out;
  out.x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  Eigen::VectorXd inv_diag = Eigen::VectorXd::Ones(n);
  if (jacobi) inv_diag = a.diagonal().cwiseInverse();

  Eigen::VectorXd r = b;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd ap(n);
  double rz = r.dot(z);
  out.residual = 1.0;
  for (int it = 1; it <= max_iterations; ++it) {
    ap.noalias() = a * p;
    const double alpha = rz / p.dot(ap);
    out.x += alpha * p;
    r -= alpha * ap;
    out.iterations = it;
    out.residual = r.norm() / bnorm;
    if (out.residual <= rel_tol) {
      out.converged = true;
      break;
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return out;
}

FESolution solve(const SparseSystem& system, const SolverOptions& options) {
  const Eigen::Index n = system.num_dofs();
  Eigen::VectorXd x;
  FESolution sol;
  const double bnorm = system.rhs.norm();
  if (n == 0 || bnorm == 0.0) {
    x = Eigen::VectorXd::Zero(n);
  } else if (options.kind == SolverKind::cg) {
    const int cap = options.max_iterations > 0
                        ? options.max_iterations
                        : static_cast<int>(std::ceil(20.0 * std::sqrt(static_cast<double>(n))));
    CgResult cg = conjugate_gradient(system.matrix, system.rhs, true, options.rel_tol, cap);
    if (!cg.converged)
      throw SolverError("cg: no convergence in " + std::to_string(cap) +
                            " iterations, relative residual " + std::to_string(cg.residual),
                        cg.residual);
    x = std::move(cg.x);
    sol.iterations = cg.iterations;
  } else {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(system.matrix);
    if (ldlt.info() != Eigen::Success) throw SolverError("cholesky: factorization failed", 1.0);
    x = ldlt.solve(system.rhs);
  }
  sol.residual = bnorm == 0.0 ? 0.0 : (system.rhs - system.matrix * x).norm() / bnorm;
  if (!(sol.residual <= options.rel_tol))
    throw SolverError("solve: relative residual " + std::to_string(sol.residual) +
                          " above tolerance",
                      sol.residual);

  sol.mesh = system.mesh;
  sol.element_coefficients = system.element_coefficients;
  sol.nodal = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(system.dof_of_vertex.size()));
  for (std::size_t v = 0; v < system.dof_of_vertex.size(); ++v)
    if (system.dof_of_vertex[v] >= 0) sol.nodal[static_cast<Eigen::Index>(v)] = x[system.dof_of_vertex[v]];
  return sol;
}

FESolution solve_pde(MeshPtr mesh, const CoefficientSample& coeff, const SourceTerm& f,
                     const SolverOptions& options) {
  return solve(assemble(std::move(mesh), coeff, f), options);
}

double l2_norm(const TriMesh& mesh, const Eigen::VectorXd& nodal) {
  double sum = 0.0;
  for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
    const auto& tri = mesh.triangle(static_cast<int>(k));
    const double u0 = nodal[tri[0]], u1 = nodal[tri[1]], u2 = nodal[tri[2]];
    // Element mass matrix area/12 * [[2,1,1],[1,2,1],[1,1,2]].
    const double quad = u0 * u0 + u1 * u1 + u2 * u2 + u0 * u1 + u1 * u2 + u0 * u2;
    sum += mesh.area(static_cast<int>(k)) / 6.0 * quad;
  }
  return std::sqrt(sum);
}

double h1_seminorm(const TriMesh& mesh, const Eigen::VectorXd& nodal) {
  std::vector<double> ones(mesh.num_triangles(), 1.0);
  return energy_norm(mesh, nodal, ones);
}

double h1_norm(const TriMesh& mesh, const Eigen::VectorXd& nodal) {
  const double l2 = l2_norm(mesh, nodal);
  const double semi = h1_seminorm(mesh, nodal);
  return std::sqrt(l2 * l2 + semi * semi);
}

double h1_norm(const FESolution& sol) { return h1_norm(*sol.mesh, sol.nodal); }

double energy_norm(const TriMesh& mesh, const Eigen::VectorXd& nodal,
                   std::span<const double> element_coefficients) {
  double sum = 0.0;
  for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
    const int t = static_cast<int>(k);
    const Point g = element_gradient(mesh, t, nodal);
    sum += element_coefficients[k] * mesh.area(t) * (g.x * g.x + g.y * g.y);
  }
  return std::sqrt(sum);
}

double energy_norm(const FESolution& sol) {
  return energy_norm(*sol.mesh, sol.nodal, sol.element_coefficients);
}

}  // namespace uq
