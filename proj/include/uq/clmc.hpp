#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "uq/coefficient.hpp"
#include "uq/indicator.hpp"
#include "uq/sampling.hpp"
#include "uq/stats.hpp"

namespace uq {

/// Gap enforced between consecutive levels when an estimator fails to decrease.
inline constexpr double kMinLevelGap = 1e-6;

/// -ln(e_j / e_0). Throws DomainError unless both are positive.
double continuous_level(double e_j, double e_0);

struct LevelSequence {
  std::vector<double> levels;  // levels[0] == 0
  int enforced = 0;            // how many entries were lifted to keep the sequence increasing
};

/// Levels of an estimator sequence, lifted to l_{j-1} + kMinLevelGap wherever
/// the raw level does not increase.
LevelSequence continuous_levels(std::span<const double> estimators);

struct ClipResult {
  int J = 0;
  std::vector<double> clipped;  // clipped[j] = min(l_j, L_r) for j = 0..J
  bool truncated = false;       // no level reached L_r
};

/// J = min{j >= 1 : l_j >= L_r}; when no level qualifies J is the last index
/// and the result is flagged truncated.
ClipResult clip_and_index(std::span<const double> levels, double max_level);

/// w_j = (exp(r lt_j) - exp(r l_{j-1})) / (r (l_j - l_{j-1})), j = 1..J.
/// Entry 0 of the result is unused and set to 0.
std::vector<double> clmc_weights(std::span<const double> levels, std::span<const double> clipped,
                                 int J, double r);

/// One CLMC sample.
struct SamplePath {
  double max_level = 0.0;           // L_r
  std::vector<double> levels;       // l_0 = 0, increasing
  std::vector<double> qoi;          // Q_0..Q_n
  std::vector<double> estimators;   // e_0..e_n
  std::vector<std::size_t> dofs;    // N_0..N_n
  int J = 0;
  std::vector<double> clipped;
  bool truncated = false;
  int enforced_levels = 0;

  double cost_dofs() const;
  std::size_t max_dofs() const;
};

/// Fills levels, J, clipped and truncated of a path whose max_level, qoi and
/// estimators are set. A truncated path keeps Q constant beyond its last
/// computed level.
void finalize_path(SamplePath& path);

/// Y = sum_j w_j (Q_j - Q_{j-1}).
double path_contribution(const SamplePath& path, double r);

/// (1/(M-1)) ((1/M) sum Y^2 - ((1/M) sum Y)^2): variance of the mean of Y.
double variance_estimate(std::span<const double> y);

/// E[dQ/dl] <= c4 e^{-alpha l}, V[dQ/dl] <= c5 e^{-beta l}, C[l] <= c6 e^{gamma l}.
struct ClmcRateFit {
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  double c4 = 0.0, c5 = 0.0, c6 = 0.0;
  double level_lo = 0.0, level_hi = 0.0;
  LinearFit mean_fit, variance_fit, cost_fit;  // natural log
  std::size_t samples = 0;
  std::vector<std::string> warnings;

  bool hypotheses_hold() const { return std::min(beta, 2.0 * alpha) > gamma; }
};

struct ClmcGridRow {
  double level = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double cost = 0.0;
};

/// Interpolates the piecewise constant dQ/dl of every path onto `points`
/// uniform points of [max_k l_1, min_k l_J] and fits the three log-linear
/// laws. Each path must use all of its computed levels (no clipping).
ClmcRateFit fit_clmc_rates(std::span<const SamplePath> paths, int points = 50,
                           std::vector<ClmcGridRow>* grid = nullptr);

/// Cost bound of the estimator as a function of the rate r.
double clmc_cost_bound(const ClmcRateFit& fit, double eps, double r);

/// Argmin of clmc_cost_bound over `grid` midpoints of (gamma, min{beta, 2 alpha}).
/// Throws NumericalError when that interval is empty.
double optimal_rate_param(const ClmcRateFit& fit, double eps, int grid = 1000);

/// ceil((1/eps^2)(4 c5/((beta - r) beta) + c4^2 r/((2 alpha - r) alpha^2))).
std::size_t theoretical_sample_size(const ClmcRateFit& fit, double eps, double r);

/// M exp(-r L_bar).
double truncation_bias_bound(double M, double r, double L_bar);

/// Produces the computed part of a sample path up to a given maximal level.
class PathModel {
 public:
  virtual ~PathModel() = default;
  /// Compute sample `index` until its level reaches max_level or a cap hits.
  virtual SamplePath path(std::uint64_t index, double max_level) = 0;
  /// Compute sample `index` with exactly `refinements` refinements, for rate fits.
  virtual SamplePath full_path(std::uint64_t index, int refinements) = 0;
};

/// Random jump-coefficient PDE on samplewise adaptive meshes.
class AdaptivePdeModel : public PathModel {
 public:
  struct Options {
    CoefficientKind kind = CoefficientKind::box;
    double contrast = 300.0;
    int base_n = 15;
    double theta = 0.5;
    std::size_t max_dofs = 200000;
    int max_refinements = 60;
    SolverOptions solver;
  };
  AdaptivePdeModel(Options options, std::uint64_t seed);

  SamplePath path(std::uint64_t index, double max_level) override;
  SamplePath full_path(std::uint64_t index, int refinements) override;
  CoefficientSample coefficient(std::uint64_t index) const;

 private:
  SamplePath run(std::uint64_t index, double max_level, int refinements, bool use_target);

  Options options_;
  std::uint64_t seed_;
  MeshPtr initial_;
};

/// Deterministic path Q(l) = q_inf - a e^{-alpha l} sampled at levels
/// l_j = j * step, cost N_j = n0 e^{gamma l_j}. Useful for unbiasedness checks.
class DeterministicPathModel : public PathModel {
 public:
  struct Params {
    double q_inf = 1.0;
    double a = 1.0;
    double alpha = 2.0;
    double step = 0.5;
    double gamma = 1.0;
    double n0 = 256.0;
    int max_steps = 200;
  };
  explicit DeterministicPathModel(Params params) : p_(params) {}

  SamplePath path(std::uint64_t index, double max_level) override;
  SamplePath full_path(std::uint64_t index, int refinements) override;

 private:
  SamplePath build(int steps) const;
  Params p_;
};

/// Pseudo source gives CLMC, low-discrepancy source gives QCLMC.
struct ClmcConfig {
  double eps = 0.1;
  double rate = 1.5;
  std::size_t m_ini = 20;
  std::size_t max_samples = 1000000;
  SourceKind source = SourceKind::pseudo;
  std::uint64_t level_seed = 0;
};

struct ClmcSampleRecord {
  std::uint64_t k = 0;  // 1-based
  double max_level = 0.0;
  int J = 0;
  std::size_t max_dofs = 0;
  double y = 0.0;
  double estimate = 0.0;  // running mean of Y
  double variance = 0.0;  // running stopping variance (1 during warm-up)
  bool truncated = false;
  double cost_dofs = 0.0;
};

struct ClmcRun {
  double estimate = 0.0;
  double variance = 0.0;  // variance_estimate over all samples taken
  std::size_t samples = 0;
  std::size_t truncations = 0;
  int enforced_levels = 0;
  double truncation_level = 0.0;  // smallest level at which a path was cut (or largest reached)
  double truncation_bound = 0.0;
  bool converged = false;  // false when max_samples stopped the run
  double cost_dofs = 0.0;
  double seconds = 0.0;
  std::vector<ClmcSampleRecord> records;
};

/// On-the-fly CLMC: draw maximal levels from Exp(rate) with the configured
/// source, compute paths, stop once more than m_ini samples are in and the
/// variance estimate is at most eps^2.
ClmcRun run_clmc(const ClmcConfig& config, PathModel& model);

/// M paths with a fixed number of refinements, then fit_clmc_rates.
ClmcRateFit estimate_rates_clmc(PathModel& model, int J, std::size_t M, int points = 50,
                                std::vector<ClmcGridRow>* grid = nullptr);

}  // namespace uq
