#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "uq/error.hpp"
#include "uq/harness.hpp"
#include "uq/indicator.hpp"
#include "uq/level_model.hpp"
#include "uq/sampling.hpp"

namespace uq::harness {

namespace fs = std::filesystem;

namespace {

// Runs body(i) for i in [0, n) on up to `workers` threads. The first
// exception is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t n, int workers, F&& body) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  const auto count = std::min<std::size_t>(n, static_cast<std::size_t>(workers));
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

SolverOptions solver_options(const ProblemConfig& p) {
  SolverOptions opt;
  opt.kind = p.solver;
  return opt;
}

AdaptivePdeModel::Options path_options(const ProblemConfig& p) {
  AdaptivePdeModel::Options opt;
  opt.kind = p.kind;
  opt.contrast = p.contrast;
  opt.base_n = p.base_n;
  opt.theta = p.theta;
  opt.max_dofs = p.dof_max;
  opt.max_refinements = p.max_refinements;
  opt.solver = solver_options(p);
  return opt;
}

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void prepare(const fs::path& out) { fs::create_directories(out); }

struct RateResult {
  Json fit;  // null when fewer than two usable points
  double rate = std::nan("");
};

// -slope of log(y) against log(dofs) over the points with dofs >= min_dofs and y > 0.
RateResult fitted_rate(const std::vector<std::size_t>& dofs, const std::vector<double>& y,
                       std::size_t min_dofs) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    if (dofs[i] < min_dofs || !(y[i] > 0.0)) continue;
    lx.push_back(std::log(static_cast<double>(dofs[i])));
    ly.push_back(std::log(y[i]));
  }
  RateResult r;
  if (lx.size() < 2) return r;
  const auto f = least_squares(lx, ly);
  r.rate = -f.slope;
  r.fit = {{"rate", -f.slope}, {"intercept", f.intercept}, {"r2", number(f.r2)}, {"points", f.points}};
  return r;
}

}  // namespace

Json cmd_converge(const ExperimentConfig& config, const fs::path& out) {
  prepare(out);
  const auto& p = config.problem;
  const auto& c = config.converge;
  const auto coeff = p.kind == CoefficientKind::box ? make_box(c.x, c.y, c.length, p.contrast)
                                                    : make_cross(c.x, c.y, p.contrast);
  const SourceTerm f(1.0);
  const auto solver = solver_options(p);

  struct Row {
    std::string method;
    int step;
    std::size_t dofs;
    double qoi;
    double estimator;
  };
  std::vector<Row> rows;

  const auto bx = coeff.breaks_x();
  const auto by = coeff.breaks_y();
  std::vector<double> aligned;
  for (std::size_t i = 0; i < c.aligned_n.size(); ++i) {
    auto mesh = std::make_shared<const TriMesh>(aligned_structured_mesh(bx, by, c.aligned_n[i]));
    const auto sol = solve_pde(mesh, coeff, f, solver);
    aligned.push_back(h1_norm(sol));
    rows.push_back({"aligned", static_cast<int>(i), mesh->num_vertices(), aligned.back(),
                    total_estimator(residual_indicators(sol, f))});
  }
  // Aligned meshes converge like h^2 and the resolution doubles per step.
  const double q_fine = aligned.back();
  const double q_prev = aligned[aligned.size() - 2];
  const double reference = q_fine + (q_fine - q_prev) / 3.0;

  for (int l = 0; l < c.uniform_levels; ++l) {
    auto mesh = std::make_shared<const TriMesh>(uniform_family(l, p.base_n));
    const auto sol = solve_pde(mesh, coeff, f, solver);
    rows.push_back({"uniform", l, mesh->num_vertices(), h1_norm(sol),
                    total_estimator(residual_indicators(sol, f))});
  }

  AdaptiveOptions opt;
  opt.theta = p.theta;
  opt.max_refinements = c.adaptive_refinements;
  opt.max_dofs = p.dof_max;
  opt.solver = solver;
  const auto h = adaptive_hierarchy(std::make_shared<const TriMesh>(uniform_family(0, p.base_n)),
                                    coeff, f, opt);
  for (std::size_t j = 0; j < h.steps.size(); ++j)
    rows.push_back({"adaptive", static_cast<int>(j), h.steps[j].dofs, h.steps[j].qoi,
                    h.steps[j].estimator});

  CsvWriter csv(out / "converge.csv", config,
                {"method", "step", "dofs", "qoi", "weak_error", "estimator"});
  std::map<std::string, std::vector<std::size_t>> dofs;
  std::map<std::string, std::vector<double>> err, est;
  for (const auto& r : rows) {
    const double e = std::abs(reference - r.qoi);
    csv << r.method << r.step << r.dofs << r.qoi << e << r.estimator;
    csv.end_row();
    dofs[r.method].push_back(r.dofs);
    err[r.method].push_back(e);
    est[r.method].push_back(r.estimator);
  }

  const auto min_dofs = c.fit_min_dofs;
  const auto uni_err = fitted_rate(dofs["uniform"], err["uniform"], min_dofs);
  const auto ada_err = fitted_rate(dofs["adaptive"], err["adaptive"], min_dofs);
  const auto ada_est = fitted_rate(dofs["adaptive"], est["adaptive"], min_dofs);
  const auto uni_est = fitted_rate(dofs["uniform"], est["uniform"], min_dofs);
  Json summary;
  summary["command"] = "converge";
  summary["coefficient"] = {{"kind", std::string(to_string(p.kind))},
                            {"x", c.x},
                            {"y", c.y},
                            {"length", p.kind == CoefficientKind::box ? Json(c.length) : Json(nullptr)},
                            {"contrast", p.contrast}};
  summary["reference"] = {{"value", reference},
                          {"aligned_qoi", aligned},
                          {"aligned_n", c.aligned_n},
                          {"extrapolation", "richardson_h2"}};
  summary["adaptive_steps"] = h.steps.size();
  summary["adaptive_truncated"] = h.truncated;
  summary["fit_min_dofs"] = min_dofs;
  summary["fits"] = {{"uniform_weak_error", uni_err.fit},
                     {"uniform_estimator", uni_est.fit},
                     {"adaptive_weak_error", ada_err.fit},
                     {"adaptive_estimator", ada_est.fit}};
  summary["rate_ratio_weak_error"] = number(ada_err.rate / uni_err.rate);
  write_summary(out / "converge.json", config, summary);
  return summary;
}

Json cmd_rates(const ExperimentConfig& config, const fs::path& out) {
  prepare(out);
  const auto& p = config.problem;
  const auto& rc = config.rates;
  using clock = std::chrono::steady_clock;

  auto t0 = clock::now();
  UniformPdeModel level_model(p.kind, p.contrast, p.base_n, config.seed, solver_options(p));
  std::vector<LevelSummary> pilot;
  const auto mlmc = estimate_rates_mlmc(level_model, rc.mlmc_levels, rc.mlmc_samples, p.s, &pilot);
  const double mlmc_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  t0 = clock::now();
  AdaptivePdeModel path_model(path_options(p), config.seed);
  std::vector<ClmcGridRow> grid;
  const auto clmc =
      estimate_rates_clmc(path_model, rc.clmc_refinements, rc.clmc_samples, rc.grid_points, &grid);
  const double clmc_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  {
    CsvWriter csv(out / "mlmc_pilot.csv", config,
                  {"level", "count", "mean", "variance", "cost_dofs"});
    for (const auto& l : pilot) {
      csv << l.level << l.count << l.mean << l.variance << l.cost_dofs;
      csv.end_row();
    }
  }
  {
    CsvWriter csv(out / "clmc_grid.csv", config, {"level", "mean", "variance", "cost"});
    for (const auto& g : grid) {
      csv << g.level << g.mean << g.variance << g.cost;
      csv.end_row();
    }
  }
  {
    CsvWriter csv(out / "rates_timing.csv", config, {"stage", "level", "seconds"});
    for (const auto& l : pilot) {
      csv << "mlmc_level" << l.level << l.seconds;
      csv.end_row();
    }
    csv << "mlmc_total" << -1 << mlmc_seconds;
    csv.end_row();
    csv << "clmc_total" << -1 << clmc_seconds;
    csv.end_row();
  }

  // Per-tolerance tuning derived from the fits.
  Json tuning = Json::array();
  for (int i : config.compare.tolerances) {
    const double eps2 = tolerance_eps2(config.compare, i);
    const double eps = std::sqrt(eps2);
    Json row = {{"tolerance_index", i}, {"eps2", eps2}};
    const auto bw = optimal_bias_weight(mlmc, eps, config.compare.l_max);
    row["mlmc"] = {{"b_hat", bw.b_hat},
                   {"b_low", bw.b_low},
                   {"feasible", bw.feasible},
                   {"bias_level", number(mlmc_bias_level(mlmc, eps, bw.b_hat))}};
    try {
      const double r = optimal_rate_param(clmc, eps);
      const double upper = std::min(clmc.beta, 2.0 * clmc.alpha);
      row["clmc"] = {{"r_hat", r},
                     {"interior", r > clmc.gamma && r < upper},
                     {"sample_size", theoretical_sample_size(clmc, eps, r)}};
    } catch (const NumericalError& e) {
      row["clmc"] = {{"error", e.what()}};
    }
    tuning.push_back(row);
  }

  Json summary;
  summary["command"] = "rates";
  summary["mlmc"] = to_json(mlmc);
  summary["clmc"] = to_json(clmc);
  summary["mlmc_pilot"] = {{"levels", rc.mlmc_levels}, {"samples", rc.mlmc_samples}};
  summary["clmc_pilot"] = {{"refinements", rc.clmc_refinements},
                           {"samples", rc.clmc_samples},
                           {"grid_points", rc.grid_points}};
  summary["tuning"] = tuning;
  write_summary(out / "rates.json", config, summary);
  return summary;
}

Json cmd_lds(const ExperimentConfig& config, const fs::path& out) {
  prepare(out);
  const auto& lc = config.lds;
  std::vector<std::size_t> counts;
  for (int e = lc.min_exponent; e <= lc.max_exponent; ++e) counts.push_back(std::size_t{1} << e);
  const auto rows = moment_mse_experiment(lc.rate, counts, lc.runs, config.scramble_seed);

  CsvWriter csv(out / "lds.csv", config, {"source", "count", "mean_mse", "variance_mse"});
  std::map<std::string, std::vector<double>> lx, lmean, lvar;
  std::map<std::string, double> at_max;
  for (const auto& r : rows) {
    const std::string kind(to_string(r.kind));
    csv << kind << r.count << r.mean_mse << r.variance_mse;
    csv.end_row();
    lx[kind].push_back(std::log(static_cast<double>(r.count)));
    lmean[kind].push_back(std::log(r.mean_mse));
    lvar[kind].push_back(std::log(r.variance_mse));
    if (r.count == counts.back()) at_max[kind] = r.mean_mse;
  }

  Json slopes;
  for (const auto& [kind, x] : lx) {
    const auto fm = least_squares(x, lmean[kind]);
    const auto fv = least_squares(x, lvar[kind]);
    slopes[kind] = {{"mean_mse_slope", fm.slope},
                    {"mean_mse_r2", number(fm.r2)},
                    {"variance_mse_slope", fv.slope},
                    {"variance_mse_r2", number(fv.r2)}};
  }
  Json summary;
  summary["command"] = "lds";
  summary["rate"] = lc.rate;
  summary["exact_mean"] = 1.0 / lc.rate;
  summary["exact_variance"] = 1.0 / (lc.rate * lc.rate);
  summary["runs"] = lc.runs;
  summary["counts"] = counts;
  summary["slopes"] = slopes;
  summary["mean_mse_ratio_at_max_count"] =
      number(at_max["pseudo"] / at_max[std::string(to_string(SourceKind::low_discrepancy))]);
  write_summary(out / "lds.json", config, summary);
  return summary;
}

Json cmd_reference(const ExperimentConfig& config, const fs::path& out) {
  prepare(out);
  const auto& p = config.problem;
  const auto& rc = config.reference;
  const double t = rc.tolerance;
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();

  // Variance budget (1-b) eps^2 = t^2 and bias budget b eps^2 = t^2.
  MlmcConfig mc;
  mc.eps = std::sqrt(2.0) * t;
  mc.s = p.s;
  mc.alpha = 1.0;
  mc.b_hat = 0.5;
  mc.m_ini = rc.m_ini;
  mc.l_max = rc.l_max;
  mc.include_base = true;
  AlignedPdeModel aligned(p.kind, p.contrast, p.base_n, rc.seed, solver_options(p));
  const auto ml = run_mlmc(mc, aligned);

  UniformPdeModel uniform(p.kind, p.contrast, p.base_n, rc.seed + 1, solver_options(p));
  RunningStats q0;
  std::vector<double> q0_samples;
  while (q0.count() < rc.m_ini || q0.variance() / static_cast<double>(q0.count()) > t * t) {
    q0_samples.push_back(uniform.single(0, q0.count()));
    q0.add(q0_samples.back());
  }
  const double seconds = std::chrono::duration<double>(clock::now() - start).count();

  {
    CsvWriter csv(out / "reference_levels.csv", config,
                  {"level", "count", "mean", "variance", "cost_dofs"});
    for (const auto& l : ml.levels) {
      csv << l.level << l.count << l.mean << l.variance << l.cost_dofs;
      csv.end_row();
    }
  }
  {
    CsvWriter csv(out / "reference_q0.csv", config, {"k", "q0"});
    for (std::size_t k = 0; k < q0_samples.size(); ++k) {
      csv << k << q0_samples[k];
      csv.end_row();
    }
  }
  {
    CsvWriter csv(out / "reference_timing.csv", config, {"stage", "seconds"});
    csv << "total" << seconds;
    csv.end_row();
  }

  const double q0_var = q0.variance() / static_cast<double>(q0.count());
  const double bias2 = ml.bias_proxy * ml.bias_proxy;
  Json summary;
  summary["command"] = "reference";
  summary["value"] = ml.estimate - q0.mean();
  summary["aligned_estimate"] = ml.estimate;
  summary["q0_estimate"] = q0.mean();
  summary["q0_samples"] = q0.count();
  summary["component_tolerance"] = t;
  summary["mse_budget"] = 3.0 * t * t;
  summary["components"] = {{"aligned_variance", ml.variance},
                           {"aligned_bias_squared", bias2},
                           {"q0_variance", q0_var}};
  summary["mse_estimate"] = ml.variance + bias2 + q0_var;
  summary["aligned_levels"] = static_cast<int>(ml.levels.size()) - 1;
  summary["bias_converged"] = ml.bias_converged;
  write_summary(out / "reference.json", config, summary);
  return summary;
}

Json cmd_compare(const ExperimentConfig& config, const fs::path& out) {
  prepare(out);
  const auto& p = config.problem;
  const auto& cc = config.compare;
  const fs::path rates_file = cc.rates.empty() ? out / "rates.json" : fs::path(cc.rates);
  const fs::path ref_file = cc.reference.empty() ? out / "reference.json" : fs::path(cc.reference);
  const Json rates = read_summary(rates_file, "rates");
  const Json ref = read_summary(ref_file, "reference");
  if (!rates.contains("mlmc") || !rates.contains("clmc"))
    throw ConfigError(rates_file.string() + " lacks rate fits; rerun `uq rates`");
  if (!ref.contains("value") || !ref["value"].is_number())
    throw ConfigError(ref_file.string() + " lacks a reference value; rerun `uq reference`");
  const auto mfit = mlmc_fit_from_json(rates["mlmc"]);
  const auto cfit = clmc_fit_from_json(rates["clmc"]);
  const double reference = ref["value"].get<double>();

  struct Record {
    std::string method;
    int tol = 0;
    double eps2 = 0.0;
    int run = 0;
    std::uint64_t pde_seed = 0, level_seed = 0;
    double estimate = 0.0, variance = 0.0, cost = 0.0, seconds = 0.0;
    std::size_t samples = 0;
    int depth = 0;  // MLMC finest level, CLMC largest J
    std::size_t truncations = 0;
    bool converged = false;
    double tuning = 0.0;  // b_hat or r_hat
    std::vector<LevelSummary> levels;
    std::vector<ClmcSampleRecord> paths;
  };

  const int runs = cc.runs;
  std::vector<Record> records;
  for (int i : cc.tolerances) {
    const double eps2 = tolerance_eps2(cc, i);
    const double eps = std::sqrt(eps2);
    for (const auto& method : cc.methods) {
      double tuning;
      if (method == "mlmc") {
        tuning = optimal_bias_weight(mfit, eps, cc.l_max).b_hat;
      } else {
        tuning = optimal_rate_param(cfit, eps);
      }
      const std::size_t first = records.size();
      for (int r = 0; r < runs; ++r) {
        Record rec;
        rec.method = method;
        rec.tol = i;
        rec.eps2 = eps2;
        rec.run = r;
        rec.pde_seed = config.seed + static_cast<std::uint64_t>(r + runs * i);
        rec.level_seed = config.scramble_seed + static_cast<std::uint64_t>(r + runs * i);
        rec.tuning = tuning;
        records.push_back(std::move(rec));
      }
      parallel_for(static_cast<std::size_t>(runs), config.worker_count(), [&](std::size_t r) {
        Record& rec = records[first + r];
        if (rec.method == "mlmc") {
          UniformPdeModel model(p.kind, p.contrast, p.base_n, rec.pde_seed, solver_options(p));
          MlmcConfig mc;
          mc.eps = eps;
          mc.s = p.s;
          mc.alpha = mfit.alpha;
          mc.b_hat = rec.tuning;
          mc.m_ini = cc.m_ini;
          mc.l_max = cc.l_max;
          const auto run = run_mlmc(mc, model);
          rec.estimate = run.estimate;
          rec.variance = run.variance;
          rec.cost = run.cost_dofs;
          rec.seconds = run.seconds;
          rec.depth = run.levels.back().level;
          rec.converged = run.bias_converged;
          for (const auto& l : run.levels) rec.samples += l.count;
          rec.levels = run.levels;
        } else {
          AdaptivePdeModel model(path_options(p), rec.pde_seed);
          ClmcConfig cfg;
          cfg.eps = eps;
          cfg.rate = rec.tuning;
          cfg.m_ini = cc.m_ini;
          cfg.source = rec.method == "qclmc" ? SourceKind::low_discrepancy : SourceKind::pseudo;
          cfg.level_seed = rec.level_seed;
          const auto run = run_clmc(cfg, model);
          rec.estimate = run.estimate;
          rec.variance = run.variance;
          rec.cost = run.cost_dofs;
          rec.seconds = run.seconds;
          rec.samples = run.samples;
          rec.truncations = run.truncations;
          rec.converged = run.converged;
          for (const auto& s : run.records) rec.depth = std::max(rec.depth, s.J);
          rec.paths = run.records;
        }
      });
    }
  }

  {
    CsvWriter csv(out / "compare_records.csv", config,
                  {"method", "tolerance_index", "eps2", "run", "pde_seed", "level_seed", "tuning",
                   "estimate", "squared_error", "variance_estimate", "cost_dofs", "samples",
                   "depth", "truncations", "converged"});
    for (const auto& r : records) {
      const double e = r.estimate - reference;
      csv << r.method << r.tol << r.eps2 << r.run << std::size_t{r.pde_seed}
          << std::size_t{r.level_seed} << r.tuning << r.estimate << e * e << r.variance << r.cost
          << r.samples << r.depth << r.truncations << (r.converged ? 1 : 0);
      csv.end_row();
    }
  }
  {
    CsvWriter csv(out / "compare_timing.csv", config,
                  {"method", "tolerance_index", "run", "seconds"});
    for (const auto& r : records) {
      csv << r.method << r.tol << r.run << r.seconds;
      csv.end_row();
    }
  }
  {
    CsvWriter csv(out / "compare_mlmc_levels.csv", config,
                  {"tolerance_index", "run", "level", "count", "mean", "variance", "cost_dofs"});
    for (const auto& r : records)
      for (const auto& l : r.levels) {
        csv << r.tol << r.run << l.level << l.count << l.mean << l.variance << l.cost_dofs;
        csv.end_row();
      }
  }
  {
    CsvWriter csv(out / "compare_clmc_samples.csv", config,
                  {"method", "tolerance_index", "run", "k", "max_level", "J", "max_dofs", "y",
                   "estimate", "variance", "truncated", "cost_dofs"});
    for (const auto& r : records)
      for (const auto& s : r.paths) {
        csv << r.method << r.tol << r.run << std::size_t{s.k} << s.max_level << s.J << s.max_dofs
            << s.y << s.estimate << s.variance << (s.truncated ? 1 : 0) << s.cost_dofs;
        csv.end_row();
      }
  }

  // Aggregates per (method, tolerance).
  Json cells = Json::array();
  std::map<std::string, std::vector<double>> log_mse, log_time, log_eps2;
  std::map<std::pair<std::string, int>, double> mean_mse;
  for (std::size_t b = 0; b < records.size(); b += runs) {
    RunningStats se, secs, cost, samples;
    for (int r = 0; r < runs; ++r) {
      const auto& rec = records[b + r];
      const double e = rec.estimate - reference;
      se.add(e * e);
      secs.add(rec.seconds);
      cost.add(rec.cost);
      samples.add(static_cast<double>(rec.samples));
    }
    const auto& head = records[b];
    const double half = 1.96 * std::sqrt(se.variance() / runs);
    cells.push_back({{"method", head.method},
                     {"tolerance_index", head.tol},
                     {"eps2", head.eps2},
                     {"runs", runs},
                     {"tuning", head.tuning},
                     {"mean_mse", se.mean()},
                     {"mse_ci95", {se.mean() - half, se.mean() + half}},
                     {"mse_over_eps2", se.mean() / head.eps2},
                     {"mean_seconds", secs.mean()},
                     {"mean_cost_dofs", cost.mean()},
                     {"mean_samples", samples.mean()}});
    log_mse[head.method].push_back(std::log(se.mean()));
    log_time[head.method].push_back(std::log(secs.mean()));
    log_eps2[head.method].push_back(std::log(head.eps2));
    mean_mse[{head.method, head.tol}] = se.mean();
  }

  Json slopes;
  for (const auto& [method, x] : log_mse) {
    if (x.size() < 2) continue;
    slopes[method] = {{"time_vs_mse", number(least_squares(x, log_time[method]).slope)},
                      {"time_vs_eps2", number(least_squares(log_eps2[method], log_time[method]).slope)}};
  }
  Json summary;
  summary["command"] = "compare";
  summary["reference"] = reference;
  summary["reference_file"] = ref_file.string();
  summary["rates_file"] = rates_file.string();
  summary["cells"] = cells;
  summary["slopes"] = slopes;
  const bool both = std::count(cc.methods.begin(), cc.methods.end(), "clmc") &&
                    std::count(cc.methods.begin(), cc.methods.end(), "qclmc");
  if (both) {
    int wins = 0;
    for (int i : cc.tolerances)
      if (mean_mse[{"qclmc", i}] <= mean_mse[{"clmc", i}]) ++wins;
    summary["qclmc_not_worse_than_clmc"] = {{"count", wins},
                                            {"tolerances", cc.tolerances.size()}};
  }
  write_summary(out / "compare_summary.json", config, summary);
  return summary;
}

}  // namespace uq::harness
