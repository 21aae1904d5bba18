#include "uq/indicator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uq/error.hpp"

namespace uq {

ErrorIndicators residual_indicators(const FESolution& sol, const SourceTerm& f) {
  const TriMesh& mesh = *sol.mesh;
  const auto& a = sol.element_coefficients;
  const std::size_t nt = mesh.num_triangles();

  std::vector<Point> flux(nt);
  std::vector<double> eta2(nt, 0.0);
  for (std::size_t k = 0; k < nt; ++k) {
    const int t = static_cast<int>(k);
    const Point g = element_gradient(mesh, t, sol.nodal);
    flux[k] = {a[k] * g.x, a[k] * g.y};

    const double area = mesh.area(t);
    double f2 = 0.0;
    if (f.is_constant()) {
      f2 = f.constant() * f.constant() * area;
    } else {
      const auto& tri = mesh.triangle(t);
      for (int i = 0; i < 3; ++i) {
        const Point& p = mesh.vertex(tri[(i + 1) % 3]);
        const Point& q = mesh.vertex(tri[(i + 2) % 3]);
        const double fm = f({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)});
        f2 += fm * fm;
      }
      f2 *= area / 3.0;
    }
    const double h = mesh.diameter(t);
    eta2[k] = h * h / a[k] * f2;
  }

  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edge(static_cast<int>(e));
    if (edge.is_boundary()) continue;
    const Point& p = mesh.vertex(edge.vertices[0]);
    const Point& q = mesh.vertex(edge.vertices[1]);
    const double len = mesh.edge_length(static_cast<int>(e));
    const Point n{(q.y - p.y) / len, -(q.x - p.x) / len};
    const int k0 = edge.triangles[0], k1 = edge.triangles[1];
    const double jump = n.x * (flux[k0].x - flux[k1].x) + n.y * (flux[k0].y - flux[k1].y);
    const double a_edge = std::max(a[k0], a[k1]);
    // The flux jump is constant along the edge, so ||jump||^2_e = len * jump^2.
    const double contrib = 0.5 * len * len * jump * jump / a_edge;
    eta2[k0] += contrib;
    eta2[k1] += contrib;
  }

  ErrorIndicators out;
  out.eta.resize(nt);
  for (std::size_t k = 0; k < nt; ++k) out.eta[k] = std::sqrt(eta2[k]);
  out.total = total_estimator(out.eta);
  return out;
}

double total_estimator(std::span<const double> eta) {
  double sum = 0.0;
  for (double v : eta) sum += v * v;
  return std::sqrt(sum);
}

double total_estimator(const ErrorIndicators& ind) { return total_estimator(ind.eta); }

std::vector<int> doerfler_mark(std::span<const double> eta, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("doerfler_mark: theta must lie in (0,1)");
  double total = 0.0;
  for (double v : eta) total += v * v;
  if (total == 0.0) return {};

  std::vector<int> order(eta.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return eta[i] > eta[j]; });
  const double goal = theta * total;
  double sum = 0.0;
  std::size_t count = 0;
  while (count < order.size() && sum < goal) {
    const double v = eta[order[count]];
    sum += v * v;
    ++count;
  }
  order.resize(count);
  return order;
}

AdaptiveHierarchy adaptive_hierarchy(MeshPtr initial, const CoefficientSample& coeff,
                                     const SourceTerm& f, const AdaptiveOptions& options) {
  AdaptiveHierarchy out;
  MeshPtr mesh = std::move(initial);
  bool satisfied = false;
  for (int j = 0;; ++j) {
    FESolution sol = solve_pde(mesh, coeff, f, options.solver);
    ErrorIndicators ind = residual_indicators(sol, f);

    HierarchyStep step;
    step.mesh = mesh;
    step.dofs = mesh->num_vertices();
    step.estimator = ind.total;
    step.qoi = h1_norm(sol);
    out.total_dofs += step.dofs;
    if (options.keep_indicators) step.eta = ind.eta;
    if (options.keep_solutions) step.solution = std::move(sol);
    out.steps.push_back(std::move(step));

    if (options.done && options.done(out.steps)) {
      satisfied = true;
      break;
    }
    if (j >= options.max_refinements) break;

    const auto marked = doerfler_mark(ind.eta, options.theta);
    if (marked.empty()) break;
    auto refined = std::make_shared<const TriMesh>(bisect_refine(*mesh, marked));
    if (options.max_dofs > 0 && refined->num_vertices() > options.max_dofs) {
      out.truncated = true;
      break;
    }
    mesh = std::move(refined);
  }
  if (options.done && !satisfied) out.truncated = true;
  return out;
}

}  // namespace uq
