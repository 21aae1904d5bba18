#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "uq/coefficient.hpp"
#include "uq/fem.hpp"
#include "uq/mesh.hpp"

namespace uq {

struct ErrorIndicators {
  std::vector<double> eta;  // per triangle, >= 0
  double total = 0.0;       // sqrt(sum eta^2)
};

/// Residual indicator for piecewise constant coefficients:
///   eta_K^2 = h_K^2 / a_K ||f||_K^2 + 1/2 sum_{interior edges} h_e^2 / a_e [[a grad u . n]]^2
/// with a_e the larger of the two neighbouring element values.
ErrorIndicators residual_indicators(const FESolution& sol, const SourceTerm& f);

double total_estimator(std::span<const double> eta);
double total_estimator(const ErrorIndicators& ind);

/// Smallest set whose squared indicators reach theta times the total.
/// Largest first, ties to the lower id. Empty when all indicators vanish.
std::vector<int> doerfler_mark(std::span<const double> eta, double theta);

struct HierarchyStep {
  MeshPtr mesh;
  std::size_t dofs = 0;  // vertex count
  double estimator = 0.0;
  double qoi = 0.0;
  std::optional<FESolution> solution;  // kept only on request
  std::vector<double> eta;             // kept only on request
};

struct AdaptiveOptions {
  double theta = 0.5;
  int max_refinements = 12;
  /// A refined mesh with more vertices than this is not solved and the
  /// hierarchy is flagged truncated. 0 disables the cap.
  std::size_t max_dofs = 0;
  /// Checked after each solve; returning true ends the hierarchy.
  std::function<bool(std::span<const HierarchyStep>)> done;
  bool keep_solutions = false;
  bool keep_indicators = false;
  SolverOptions solver;
};

struct AdaptiveHierarchy {
  std::vector<HierarchyStep> steps;
  /// Stopped by a cap while `done` was still false. Without `done` only the
  /// max_dofs cap counts.
  bool truncated = false;
  std::size_t total_dofs = 0;  // sum of solved system sizes
};

/// Solve, estimate, mark, bisect, starting from `initial`.
AdaptiveHierarchy adaptive_hierarchy(MeshPtr initial, const CoefficientSample& coeff,
                                     const SourceTerm& f, const AdaptiveOptions& options);

}  // namespace uq
