#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "uq/level_model.hpp"
#include "uq/stats.hpp"

namespace uq {

/// Arithmetic mean; throws on empty input.
double mc_estimate(std::span<const double> samples);

struct LevelSummary {
  int level = 0;
  std::size_t count = 0;
  double mean = 0.0;      // of Q_l - Q_{l-1}
  double variance = 0.0;  // unbiased sample variance of Q_l - Q_{l-1}
  double cost_dofs = 0.0; // per sample, N_l + N_{l-1}
  double seconds = 0.0;   // total wall time spent on this level
};

/// |E[Q_l - Q_{l-1}]| <= c1 s^{-alpha l}, V[...] <= c2 s^{-beta l}, C[...] <= c3 s^{gamma l}.
struct MlmcRateFit {
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  double s = 2.25;
  LinearFit mean_fit, variance_fit, cost_fit;  // in log_s
  int level_lo = 0, level_hi = 0;
  std::size_t samples = 0;
  std::vector<std::string> warnings;

  bool hypotheses_hold() const { return std::min(beta, 2.0 * alpha) > gamma; }
};

/// Log-linear fits over the given levels. Levels whose mean or variance is
/// zero or not finite are left out with a warning; fewer than three usable
/// levels is a NumericalError.
MlmcRateFit fit_mlmc_rates(std::span<const LevelSummary> levels, double s);

/// Pilot run: M samples on each of the levels 1..L, then fit_mlmc_rates.
MlmcRateFit estimate_rates_mlmc(LevelModel& model, int L, std::size_t M, double s,
                                std::vector<LevelSummary>* pilot = nullptr);

/// Continuous level at which the bias bound reaches sqrt(b) eps:
/// (1/alpha) log_s(c1 / (sqrt(b) eps (s^alpha - 1))).
double mlmc_bias_level(const MlmcRateFit& fit, double eps, double b);

/// Computable cost bound of the estimator at level L and weight b.
double mlmc_cost_bound(const MlmcRateFit& fit, double eps, double L, double b);

struct BiasWeight {
  double b_hat = 0.5;
  double b_low = 0.0;
  bool feasible = true;  // false when (b_low, 1) was empty and 0.5 was returned
};

/// Argmin of mlmc_cost_bound(fit, eps, mlmc_bias_level(fit, eps, b), b) over a
/// grid of `grid` midpoints of (b_low, 1). b_low solves
/// mlmc_bias_level(b) = L_bar and is clamped to (1e-6, 1 - 1e-6).
BiasWeight optimal_bias_weight(const MlmcRateFit& fit, double eps, double L_bar, int grid = 1000);

/// M_l = max{2, ceil(1/((1-b) eps^2) sqrt(V_l/C_l) sum_m sqrt(V_m C_m))}.
std::vector<std::size_t> optimal_samples(std::span<const double> variances,
                                         std::span<const double> costs, double eps, double b);

/// max{s^{-2a}|B_{L-2}|, s^{-a}|B_{L-1}|, |B_L|} <= sqrt(b) eps |1 - s^a|.
/// `last_three` holds B_{L-2}, B_{L-1}, B_L; missing entries count as +inf.
bool bias_stop(std::span<const double> last_three, double s, double alpha, double b, double eps);
double bias_threshold(double s, double alpha, double b, double eps);

/// Closed-form level sample sizes from the complexity proof, levels 1..L.
/// Requires beta > gamma.
std::vector<std::size_t> theoretical_samples(const MlmcRateFit& fit, double eps, double b, int L);

struct MlmcConfig {
  double eps = 0.1;
  double s = 2.25;
  double alpha = 1.0;
  double b_hat = 0.5;
  std::size_t m_ini = 20;
  int l_max = 8;
  /// Also estimate E[Q_0] on level 0 (plain samples of Q_0), giving E[Q_L].
  bool include_base = false;
};

struct MlmcRun {
  double estimate = 0.0;
  double variance = 0.0;    // sum_l V_l / M_l
  double bias_proxy = 0.0;  // |B_L| / |1 - s^alpha|
  bool bias_converged = false;
  std::vector<LevelSummary> levels;
  double cost_dofs = 0.0;
  double seconds = 0.0;
};

/// On-the-fly MLMC for E[Q_L - Q_0], or E[Q_L] with include_base: warm up on
/// levels 1..3 (0..3), then add levels until the bias test passes or l_max is
/// reached. After each change the per-level counts are raised to
/// optimal_samples (computed samples are never discarded) until the variance
/// budget (1 - b) eps^2 holds for the current variance estimates.
MlmcRun run_mlmc(const MlmcConfig& config, LevelModel& model);

}  // namespace uq
