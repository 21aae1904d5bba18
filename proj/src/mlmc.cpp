#include "uq/mlmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "uq/error.hpp"

namespace uq {

namespace {

double log_base(double x, double s) { return std::log(x) / std::log(s); }

bool usable(double v) { return std::isfinite(v) && v != 0.0; }

}  // namespace

double mc_estimate(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("mc_estimate: no samples");
  double sum = 0.0;
  for (double v : samples) sum += v;
  return sum / static_cast<double>(samples.size());
}

MlmcRateFit fit_mlmc_rates(std::span<const LevelSummary> levels, double s) {
  if (!(s > 1.0)) throw DomainError("fit_mlmc_rates: s must exceed 1");
  MlmcRateFit fit;
  fit.s = s;
  std::vector<double> lm, ym, lv, yv, lc, yc;
  for (const auto& lvl : levels) {
    const double l = lvl.level;
    if (usable(lvl.mean)) {
      lm.push_back(l);
      ym.push_back(log_base(std::abs(lvl.mean), s));
    } else {
      fit.warnings.push_back("level " + std::to_string(lvl.level) + ": mean unusable, excluded");
    }
    if (usable(lvl.variance) && lvl.variance > 0.0) {
      lv.push_back(l);
      yv.push_back(log_base(lvl.variance, s));
    } else {
      fit.warnings.push_back("level " + std::to_string(lvl.level) +
                             ": variance unusable, excluded");
    }
    if (lvl.cost_dofs > 0.0) {
      lc.push_back(l);
      yc.push_back(log_base(lvl.cost_dofs, s));
    }
  }
  if (lm.size() < 3 || lv.size() < 3 || lc.size() < 3)
    throw NumericalError("fit_mlmc_rates: fewer than three usable levels");

  fit.mean_fit = least_squares(lm, ym);
  fit.variance_fit = least_squares(lv, yv);
  fit.cost_fit = least_squares(lc, yc);
  fit.alpha = -fit.mean_fit.slope;
  fit.beta = -fit.variance_fit.slope;
  fit.gamma = fit.cost_fit.slope;
  fit.c1 = std::pow(s, fit.mean_fit.intercept);
  fit.c2 = std::pow(s, fit.variance_fit.intercept);
  fit.c3 = std::pow(s, fit.cost_fit.intercept);
  fit.level_lo = levels.front().level;
  fit.level_hi = levels.back().level;
  fit.samples = levels.front().count;
  return fit;
}

MlmcRateFit estimate_rates_mlmc(LevelModel& model, int L, std::size_t M, double s,
                                std::vector<LevelSummary>* pilot) {
  if (L < 3) throw DomainError("estimate_rates_mlmc: need L >= 3");
  if (M < 2) throw DomainError("estimate_rates_mlmc: need M >= 2");
  std::vector<LevelSummary> levels;
  for (int l = 1; l <= L; ++l) {
    const auto t0 = std::chrono::steady_clock::now();
    RunningStats acc;
    for (std::size_t k = 0; k < M; ++k) acc.add(model.sample(l, k).difference());
    LevelSummary row;
    row.level = l;
    row.count = M;
    row.mean = acc.mean();
    row.variance = acc.variance();
    row.cost_dofs = model.pair_dofs(l);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    levels.push_back(row);
  }
  if (pilot) *pilot = levels;
  return fit_mlmc_rates(levels, s);
}

double mlmc_bias_level(const MlmcRateFit& fit, double eps, double b) {
  const double sa = std::pow(fit.s, fit.alpha);
  return log_base(fit.c1 / (std::sqrt(b) * eps * (sa - 1.0)), fit.s) / fit.alpha;
}

double mlmc_cost_bound(const MlmcRateFit& fit, double eps, double L, double b) {
  const double s = fit.s;
  const double sg = std::pow(s, fit.gamma);
  const double coarse = fit.c3 * sg * (std::pow(s, fit.gamma * L) - 1.0) / (sg - 1.0);
  const double q = std::pow(s, 0.5 * (fit.gamma - fit.beta));
  const double geom = (1.0 - std::pow(q, L)) / (1.0 - q);
  const double variance_part =
      fit.c2 * fit.c3 / ((1.0 - b) * eps * eps) * std::pow(s, fit.gamma - fit.beta) * geom * geom;
  return std::max(2.0 * coarse, variance_part) + coarse;
}

BiasWeight optimal_bias_weight(const MlmcRateFit& fit, double eps, double L_bar, int grid) {
  if (!(eps > 0.0)) throw DomainError("optimal_bias_weight: eps must be positive");
  constexpr double kLo = 1e-6, kHi = 1.0 - 1e-6;
  BiasWeight out;
  const double sa = std::pow(fit.s, fit.alpha);
  const double root = fit.c1 / (eps * (sa - 1.0) * std::pow(fit.s, fit.alpha * L_bar));
  const double raw = root * root;
  if (!(raw < kHi)) {
    out.feasible = false;
    out.b_low = kHi;
    out.b_hat = 0.5;
    return out;
  }
  out.b_low = std::max(raw, kLo);
  const double step = (1.0 - out.b_low) / grid;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    const double b = out.b_low + (i + 0.5) * step;
    const double L = std::max(mlmc_bias_level(fit, eps, b), 1.0);
    const double cost = mlmc_cost_bound(fit, eps, L, b);
    if (cost < best) {
      best = cost;
      out.b_hat = b;
    }
  }
  return out;
}

std::vector<std::size_t> optimal_samples(std::span<const double> variances,
                                         std::span<const double> costs, double eps, double b) {
  if (variances.size() != costs.size())
    throw std::invalid_argument("optimal_samples: size mismatch");
  if (!(b > 0.0 && b < 1.0)) throw DomainError("optimal_samples: b must lie in (0,1)");
  double sum = 0.0;
  for (std::size_t l = 0; l < variances.size(); ++l) {
    if (!(variances[l] >= 0.0) || !(costs[l] > 0.0))
      throw DomainError("optimal_samples: variances must be >= 0 and costs > 0");
    sum += std::sqrt(variances[l] * costs[l]);
  }
  const double scale = sum / ((1.0 - b) * eps * eps);
  std::vector<std::size_t> out(variances.size());
  for (std::size_t l = 0; l < variances.size(); ++l) {
    const double m = std::ceil(scale * std::sqrt(variances[l] / costs[l]));
    out[l] = std::max<std::size_t>(2, static_cast<std::size_t>(m));
  }
  return out;
}

double bias_threshold(double s, double alpha, double b, double eps) {
  return std::sqrt(b) * eps * std::abs(1.0 - std::pow(s, alpha));
}

bool bias_stop(std::span<const double> last_three, double s, double alpha, double b, double eps) {
  double padded[3] = {std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity()};
  const std::size_t n = std::min<std::size_t>(3, last_three.size());
  for (std::size_t i = 0; i < n; ++i) padded[3 - n + i] = last_three[last_three.size() - n + i];
  const double sa = std::pow(s, -alpha);
  const double worst =
      std::max({sa * sa * std::abs(padded[0]), sa * std::abs(padded[1]), std::abs(padded[2])});
  return worst <= bias_threshold(s, alpha, b, eps);
}

std::vector<std::size_t> theoretical_samples(const MlmcRateFit& fit, double eps, double b, int L) {
  if (!(fit.beta > fit.gamma))
    throw DomainError("theoretical_samples: requires beta > gamma");
  const double q = std::pow(fit.s, 0.5 * (fit.gamma - fit.beta));
  const double lambda = fit.c2 / ((1.0 - b) * eps * eps) * q * (1.0 - std::pow(q, L)) / (1.0 - q);
  std::vector<std::size_t> out;
  for (int l = 1; l <= L; ++l) {
    const double m = lambda * std::pow(fit.s, -0.5 * (fit.beta + fit.gamma) * l);
    out.push_back(static_cast<std::size_t>(std::ceil(m)));
  }
  return out;
}

MlmcRun run_mlmc(const MlmcConfig& config, LevelModel& model) {
  if (config.m_ini < 2) throw DomainError("run_mlmc: m_ini must be at least 2");
  if (config.l_max < 3) throw DomainError("run_mlmc: l_max must be at least 3");
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const int first = config.include_base ? 0 : 1;

  std::vector<RunningStats> acc;
  std::vector<double> seconds;
  MlmcRun run;

  auto level_cost = [&](int l) { return l == 0 ? model.dofs(0) : model.pair_dofs(l); };
  auto extend = [&](int l, std::size_t target) {
    const auto t0 = clock::now();
    while (acc[l].count() < target) {
      const std::uint64_t k = acc[l].count();
      if (l == 0) {
        acc[0].add(model.single(0, k));
        run.cost_dofs += model.dofs(0);
      } else {
        const LevelSample s = model.sample(l, k);
        acc[l].add(s.difference());
        run.cost_dofs += s.cost_dofs;
      }
    }
    seconds[l] += std::chrono::duration<double>(clock::now() - t0).count();
  };
  auto add_level = [&](int l) {
    acc.resize(l + 1);
    seconds.resize(l + 1, 0.0);
    extend(l, config.m_ini);
  };
  auto rebalance = [&](int L) {
    // Fresh samples change the variance estimates, so repeat until the
    // counts no longer grow.
    for (int round = 0; round < 50; ++round) {
      std::vector<double> v, c;
      for (int l = first; l <= L; ++l) {
        v.push_back(acc[l].variance());
        c.push_back(level_cost(l));
      }
      const auto target = optimal_samples(v, c, config.eps, config.b_hat);
      bool grew = false;
      for (int l = first; l <= L; ++l) {
        if (target[l - first] > acc[l].count()) {
          extend(l, target[l - first]);
          grew = true;
        }
      }
      if (!grew) break;
    }
  };
  auto means = [&](int L) {
    return std::vector<double>{acc[L - 2].mean(), acc[L - 1].mean(), acc[L].mean()};
  };

  int L = 3;
  for (int l = first; l <= L; ++l) add_level(l);
  rebalance(L);
  run.bias_converged = bias_stop(means(L), config.s, config.alpha, config.b_hat, config.eps);
  while (!run.bias_converged && L < config.l_max) {
    ++L;
    add_level(L);
    rebalance(L);
    run.bias_converged = bias_stop(means(L), config.s, config.alpha, config.b_hat, config.eps);
  }

  for (int l = first; l <= L; ++l) {
    LevelSummary row;
    row.level = l;
    row.count = acc[l].count();
    row.mean = acc[l].mean();
    row.variance = acc[l].variance();
    row.cost_dofs = level_cost(l);
    row.seconds = seconds[l];
    run.estimate += row.mean;
    run.variance += row.variance / static_cast<double>(row.count);
    run.levels.push_back(row);
  }
  run.bias_proxy = std::abs(acc[L].mean()) / std::abs(1.0 - std::pow(config.s, config.alpha));
  run.seconds = std::chrono::duration<double>(clock::now() - start).count();
  return run;
}

}  // namespace uq
