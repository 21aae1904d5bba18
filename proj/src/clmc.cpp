#include "uq/clmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "uq/error.hpp"
#include "uq/level_model.hpp"

namespace uq {

double continuous_level(double e_j, double e_0) {
  if (!(e_j > 0.0) || !(e_0 > 0.0))
    throw DomainError("continuous_level: estimators must be positive");
  return -std::log(e_j / e_0);
}

LevelSequence continuous_levels(std::span<const double> estimators) {
  LevelSequence out;
  if (estimators.empty()) return out;
  out.levels.push_back(0.0);
  for (std::size_t j = 1; j < estimators.size(); ++j) {
    double l = continuous_level(estimators[j], estimators[0]);
    if (!(l >= out.levels.back() + kMinLevelGap)) {
      l = out.levels.back() + kMinLevelGap;
      ++out.enforced;
    }
    out.levels.push_back(l);
  }
  return out;
}

ClipResult clip_and_index(std::span<const double> levels, double max_level) {
  ClipResult out;
  const int n = static_cast<int>(levels.size()) - 1;
  out.J = n;
  out.truncated = true;
  for (int j = 1; j <= n; ++j) {
    if (levels[j] >= max_level) {
      out.J = j;
      out.truncated = false;
      break;
    }
  }
  out.clipped.resize(out.J + 1);
  for (int j = 0; j <= out.J; ++j) out.clipped[j] = std::min(levels[j], max_level);
  return out;
}

std::vector<double> clmc_weights(std::span<const double> levels, std::span<const double> clipped,
                                 int J, double r) {
  if (!(r > 0.0)) throw DomainError("clmc_weights: rate must be positive");
  std::vector<double> w(J + 1, 0.0);
  for (int j = 1; j <= J; ++j) {
    const double gap = levels[j] - levels[j - 1];
    if (!(gap > 0.0)) throw DomainError("clmc_weights: degenerate path, zero level gap");
    // expm1 form keeps full precision for small r * gap.
    const double num = std::exp(r * levels[j - 1]) * std::expm1(r * (clipped[j] - levels[j - 1]));
    w[j] = num / (r * gap);
  }
  return w;
}

double SamplePath::cost_dofs() const {
  double sum = 0.0;
  for (std::size_t n : dofs) sum += static_cast<double>(n);
  return sum;
}

std::size_t SamplePath::max_dofs() const {
  return dofs.empty() ? 0 : *std::max_element(dofs.begin(), dofs.end());
}

void finalize_path(SamplePath& path) {
  const LevelSequence seq = continuous_levels(path.estimators);
  path.levels = seq.levels;
  path.enforced_levels = seq.enforced;
  const ClipResult clip = clip_and_index(path.levels, path.max_level);
  path.J = clip.J;
  path.clipped = clip.clipped;
  path.truncated = clip.truncated;
}

double path_contribution(const SamplePath& path, double r) {
  if (path.J == 0) return 0.0;
  const auto w = clmc_weights(path.levels, path.clipped, path.J, r);
  double y = 0.0;
  for (int j = 1; j <= path.J; ++j) y += w[j] * (path.qoi[j] - path.qoi[j - 1]);
  return y;
}

double variance_estimate(std::span<const double> y) {
  if (y.size() < 2) throw DomainError("variance_estimate: need at least two values");
  const double m = static_cast<double>(y.size());
  double s1 = 0.0, s2 = 0.0;
  for (double v : y) {
    s1 += v;
    s2 += v * v;
  }
  return std::max(0.0, (s2 / m - (s1 / m) * (s1 / m)) / (m - 1.0));
}

ClmcRateFit fit_clmc_rates(std::span<const SamplePath> paths, int points,
                           std::vector<ClmcGridRow>* grid) {
  if (paths.size() < 2) throw DomainError("fit_clmc_rates: need at least two paths");
  if (points < 3) throw DomainError("fit_clmc_rates: need at least three grid points");
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& p : paths) {
    if (p.levels.size() < 2) throw DomainError("fit_clmc_rates: path without refinements");
    lo = std::max(lo, p.levels[1]);
    hi = std::min(hi, p.levels.back());
  }
  if (!(lo < hi))
    throw NumericalError(
        "fit_clmc_rates: empty common level domain; use more refinements per path");

  ClmcRateFit fit;
  fit.level_lo = lo;
  fit.level_hi = hi;
  fit.samples = paths.size();
  std::vector<double> xm, ym, xv, yv, xc, yc;
  std::vector<ClmcGridRow> rows;
  for (int g = 0; g < points; ++g) {
    const double l = lo + (hi - lo) * g / (points - 1);
    RunningStats deriv, cost;
    for (const auto& p : paths) {
      // Segment j covers (l_{j-1}, l_j]; the first grid point sits on l_1 of some path.
      std::size_t j = 1;
      while (j + 1 < p.levels.size() && p.levels[j] < l) ++j;
      deriv.add((p.qoi[j] - p.qoi[j - 1]) / (p.levels[j] - p.levels[j - 1]));
      double c = 0.0;
      for (std::size_t i = 0; i <= j; ++i) c += static_cast<double>(p.dofs[i]);
      cost.add(c);
    }
    ClmcGridRow row{l, deriv.mean(), deriv.variance(), cost.mean()};
    rows.push_back(row);
    if (std::isfinite(row.mean) && row.mean != 0.0) {
      xm.push_back(l);
      ym.push_back(std::log(std::abs(row.mean)));
    }
    if (std::isfinite(row.variance) && row.variance > 0.0) {
      xv.push_back(l);
      yv.push_back(std::log(row.variance));
    }
    xc.push_back(l);
    yc.push_back(std::log(row.cost));
  }
  const auto skipped_mean = rows.size() - xm.size();
  const auto skipped_var = rows.size() - xv.size();
  if (skipped_mean > 0)
    fit.warnings.push_back(std::to_string(skipped_mean) + " grid points with zero mean excluded");
  if (skipped_var > 0)
    fit.warnings.push_back(std::to_string(skipped_var) + " grid points with zero variance excluded");
  if (xm.size() < 3 || xv.size() < 3)
    throw NumericalError("fit_clmc_rates: fewer than three usable grid points");

  fit.mean_fit = least_squares(xm, ym);
  fit.variance_fit = least_squares(xv, yv);
  fit.cost_fit = least_squares(xc, yc);
  fit.alpha = -fit.mean_fit.slope;
  fit.beta = -fit.variance_fit.slope;
  fit.gamma = fit.cost_fit.slope;
  fit.c4 = std::exp(fit.mean_fit.intercept);
  fit.c5 = std::exp(fit.variance_fit.intercept);
  fit.c6 = std::exp(fit.cost_fit.intercept);
  if (grid) *grid = std::move(rows);
  return fit;
}

namespace {

double clmc_bracket(const ClmcRateFit& f, double r) {
  return 4.0 * f.c5 / ((f.beta - r) * f.beta) +
         f.c4 * f.c4 * r / ((2.0 * f.alpha - r) * f.alpha * f.alpha);
}

void check_rate(const ClmcRateFit& f, double r) {
  const double hi = std::min(f.beta, 2.0 * f.alpha);
  if (!(f.gamma < hi))
    throw NumericalError("CLMC hypothesis min{beta, 2 alpha} > gamma violated: beta = " +
                         std::to_string(f.beta) + ", alpha = " + std::to_string(f.alpha) +
                         ", gamma = " + std::to_string(f.gamma));
  if (!(r > f.gamma && r < hi))
    throw DomainError("rate r = " + std::to_string(r) + " outside (gamma, min{beta, 2 alpha})");
}

}  // namespace

double clmc_cost_bound(const ClmcRateFit& fit, double eps, double r) {
  return fit.c6 / (eps * eps * (r - fit.gamma)) * clmc_bracket(fit, r);
}

double optimal_rate_param(const ClmcRateFit& fit, double eps, int grid) {
  const double lo = fit.gamma;
  const double hi = std::min(fit.beta, 2.0 * fit.alpha);
  if (!(lo < hi))
    throw NumericalError("CLMC hypothesis min{beta, 2 alpha} > gamma violated: no feasible rate");
  const double step = (hi - lo) / grid;
  double best = std::numeric_limits<double>::infinity();
  double arg = 0.5 * (lo + hi);
  for (int i = 0; i < grid; ++i) {
    const double r = lo + (i + 0.5) * step;
    const double c = clmc_cost_bound(fit, eps, r);
    if (c < best) {
      best = c;
      arg = r;
    }
  }
  return arg;
}

std::size_t theoretical_sample_size(const ClmcRateFit& fit, double eps, double r) {
  check_rate(fit, r);
  const double m = std::ceil(clmc_bracket(fit, r) / (eps * eps));
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

double truncation_bias_bound(double M, double r, double L_bar) { return M * std::exp(-r * L_bar); }

AdaptivePdeModel::AdaptivePdeModel(Options options, std::uint64_t seed)
    : options_(options),
      seed_(seed),
      initial_(std::make_shared<const TriMesh>(uniform_family(0, options.base_n))) {}

CoefficientSample AdaptivePdeModel::coefficient(std::uint64_t index) const {
  UniformSource source(SourceKind::pseudo, seed_, level_stream(0, index));
  return sample_coefficient(options_.kind, source, options_.contrast);
}

SamplePath AdaptivePdeModel::run(std::uint64_t index, double max_level, int refinements,
                                 bool use_target) {
  AdaptiveOptions opt;
  opt.theta = options_.theta;
  opt.max_refinements = refinements;
  opt.max_dofs = options_.max_dofs;
  opt.solver = options_.solver;
  if (use_target) {
    opt.done = [max_level](std::span<const HierarchyStep> steps) {
      if (steps.size() < 2) return false;
      std::vector<double> e;
      for (const auto& s : steps) e.push_back(s.estimator);
      return continuous_levels(e).levels.back() >= max_level;
    };
  }
  const auto h = adaptive_hierarchy(initial_, coefficient(index), SourceTerm(1.0), opt);
  SamplePath path;
  path.max_level = max_level;
  for (const auto& s : h.steps) {
    path.qoi.push_back(s.qoi);
    path.estimators.push_back(s.estimator);
    path.dofs.push_back(s.dofs);
  }
  finalize_path(path);
  return path;
}

SamplePath AdaptivePdeModel::path(std::uint64_t index, double max_level) {
  return run(index, max_level, options_.max_refinements, true);
}

SamplePath AdaptivePdeModel::full_path(std::uint64_t index, int refinements) {
  return run(index, std::numeric_limits<double>::infinity(), refinements, false);
}

SamplePath DeterministicPathModel::build(int steps) const {
  SamplePath path;
  for (int j = 0; j <= steps; ++j) {
    const double l = j * p_.step;
    path.qoi.push_back(p_.q_inf - p_.a * std::exp(-p_.alpha * l));
    path.estimators.push_back(std::exp(-l));
    path.dofs.push_back(static_cast<std::size_t>(std::llround(p_.n0 * std::exp(p_.gamma * l))));
  }
  return path;
}

SamplePath DeterministicPathModel::path(std::uint64_t, double max_level) {
  int steps = 1;
  while (steps < p_.max_steps && steps * p_.step < max_level) ++steps;
  SamplePath path = build(steps);
  path.max_level = max_level;
  finalize_path(path);
  return path;
}

SamplePath DeterministicPathModel::full_path(std::uint64_t, int refinements) {
  SamplePath path = build(refinements);
  path.max_level = std::numeric_limits<double>::infinity();
  finalize_path(path);
  return path;
}

ClmcRun run_clmc(const ClmcConfig& config, PathModel& model) {
  if (config.m_ini < 1) throw DomainError("run_clmc: m_ini must be positive");
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  ExponentialLevelSampler sampler(config.rate,
                                  UniformSource(config.source, config.level_seed, 0));
  ClmcRun run;
  RunningStats acc;
  double lowest_cut = std::numeric_limits<double>::infinity();
  double highest_reached = 0.0;
  for (std::uint64_t k = 1; k <= config.max_samples; ++k) {
    const double max_level = draw_max_level(sampler);
    const SamplePath path = model.path(k - 1, max_level);
    const double y = path_contribution(path, config.rate);
    acc.add(y);

    ClmcSampleRecord rec;
    rec.k = k;
    rec.max_level = max_level;
    rec.J = path.J;
    rec.max_dofs = path.max_dofs();
    rec.y = y;
    rec.estimate = acc.mean();
    rec.truncated = path.truncated;
    rec.cost_dofs = path.cost_dofs();
    // Welford variance / M equals the printed estimator algebraically.
    rec.variance = k <= config.m_ini ? 1.0 : acc.variance() / static_cast<double>(k);
    run.records.push_back(rec);

    run.cost_dofs += rec.cost_dofs;
    run.enforced_levels += path.enforced_levels;
    if (path.truncated) {
      ++run.truncations;
      lowest_cut = std::min(lowest_cut, path.levels.back());
    }
    highest_reached = std::max(highest_reached, path.levels.back());
    if (k > config.m_ini && rec.variance <= config.eps * config.eps) {
      run.converged = true;
      break;
    }
  }
  run.samples = acc.count();
  run.estimate = acc.mean();
  run.variance = run.samples >= 2 ? acc.variance() / static_cast<double>(run.samples) : 1.0;
  run.truncation_level = run.truncations > 0 ? lowest_cut : highest_reached;
  run.truncation_bound =
      truncation_bias_bound(static_cast<double>(run.samples), config.rate, run.truncation_level);
  run.seconds = std::chrono::duration<double>(clock::now() - start).count();
  return run;
}

ClmcRateFit estimate_rates_clmc(PathModel& model, int J, std::size_t M, int points,
                                std::vector<ClmcGridRow>* grid) {
  if (J < 3) throw DomainError("estimate_rates_clmc: need J >= 3");
  if (M < 2) throw DomainError("estimate_rates_clmc: need M >= 2");
  std::vector<SamplePath> paths;
  paths.reserve(M);
  for (std::size_t k = 0; k < M; ++k) paths.push_back(model.full_path(k, J));
  return fit_clmc_rates(paths, points, grid);
}

}  // namespace uq
