// Acceptance gate: runs criteria 1-8 and prints one PASS/FAIL line each.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "uq/clmc.hpp"
#include "uq/error.hpp"
#include "uq/fem.hpp"
#include "uq/harness.hpp"
#include "uq/indicator.hpp"
#include "uq/level_model.hpp"
#include "uq/mlmc.hpp"

using namespace uq;
using namespace uq::harness;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "" : "FAILED ") + what);
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Context {
  fs::path work;
  bool full = false;
  fs::path box_rates;  // rates.json of the box calibration, shared by criteria 4 and 7
};

ExperimentConfig config_from(const std::string& text) { return parse_config(text); }

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Criterion 1 -----------------------------------------------------------------

struct QuadPoint {
  double w, l0, l1, l2;
};

// Degree-5 seven-point rule in barycentric coordinates.
const std::vector<QuadPoint>& seven_point_rule() {
  static const std::vector<QuadPoint> rule = [] {
    const double w1 = 0.225, w2 = 0.132394152788506, w3 = 0.125939180544827;
    const double a2 = 0.059715871789770, b2 = 0.470142064105115;
    const double a3 = 0.797426985353087, b3 = 0.101286507323456;
    return std::vector<QuadPoint>{{w1, 1.0 / 3, 1.0 / 3, 1.0 / 3}, {w2, a2, b2, b2}, {w2, b2, a2, b2},
                                  {w2, b2, b2, a2}, {w3, a3, b3, b3}, {w3, b3, a3, b3},
                                  {w3, b3, b3, a3}};
  }();
  return rule;
}

Outcome fem_verification(Context&) {
  constexpr double pi = std::numbers::pi;
  const SourceTerm f([](Point p) { return 2 * pi * pi * std::sin(pi * p.x) * std::sin(pi * p.y); });
  std::vector<double> logh, log1, log0;
  for (int n : {8, 16, 32, 64, 128}) {
    auto mesh = std::make_shared<const TriMesh>(structured_unit_square(n));
    const auto sol = solve(assemble(mesh, std::vector<double>(mesh->num_triangles(), 1.0), f));
    double e1 = 0.0, e0 = 0.0;
    for (std::size_t k = 0; k < mesh->num_triangles(); ++k) {
      const int t = static_cast<int>(k);
      const auto& tri = mesh->triangle(t);
      const Point a = mesh->vertex(tri[0]), b = mesh->vertex(tri[1]), c = mesh->vertex(tri[2]);
      const Point g = element_gradient(*mesh, t, sol.nodal);
      for (const auto& q : seven_point_rule()) {
        const double x = q.l0 * a.x + q.l1 * b.x + q.l2 * c.x;
        const double y = q.l0 * a.y + q.l1 * b.y + q.l2 * c.y;
        const double uh = q.l0 * sol.nodal[tri[0]] + q.l1 * sol.nodal[tri[1]] + q.l2 * sol.nodal[tri[2]];
        const double ux = pi * std::cos(pi * x) * std::sin(pi * y);
        const double uy = pi * std::sin(pi * x) * std::cos(pi * y);
        const double u = std::sin(pi * x) * std::sin(pi * y);
        e1 += q.w * mesh->area(t) * ((ux - g.x) * (ux - g.x) + (uy - g.y) * (uy - g.y) + (u - uh) * (u - uh));
        e0 += q.w * mesh->area(t) * (u - uh) * (u - uh);
      }
    }
    logh.push_back(std::log(1.0 / n));
    log1.push_back(0.5 * std::log(e1));
    log0.push_back(0.5 * std::log(e0));
  }
  const double h1 = least_squares(logh, log1).slope;
  const double l2 = least_squares(logh, log0).slope;
  Outcome o;
  o.check(std::abs(h1 - 1.0) <= 0.15, "H1 rate " + fmt(h1));
  o.check(std::abs(l2 - 2.0) <= 0.2, "L2 rate " + fmt(l2));
  return o;
}

// Criterion 2 -----------------------------------------------------------------

Outcome convergence(Context& ctx) {
  Outcome o;
  for (const char* kind : {"box", "cross"}) {
    const auto config = config_from(std::string(R"({"experiment": "acceptance-converge", "problem": {"coefficient": ")") +
                                    kind + R"("}})");
    const auto s = cmd_converge(config, ctx.work / (std::string("converge_") + kind));
    const auto& est = s["fits"]["adaptive_estimator"];
    const double rate = est["rate"].get<double>();
    const double ratio = s["rate_ratio_weak_error"].get<double>();
    o.check(est["points"].get<int>() >= 6, std::string(kind) + " fitted adaptive levels " +
                                               std::to_string(est["points"].get<int>()));
    o.check(std::abs(rate - 0.5) <= 0.1, std::string(kind) + " estimator rate " + fmt(rate));
    o.check(ratio >= 1.6, std::string(kind) + " weak-error rate ratio " + fmt(ratio));
  }
  return o;
}

// Criterion 3 -----------------------------------------------------------------

Outcome low_discrepancy(Context& ctx) {
  const auto config = config_from(R"({"experiment": "acceptance-lds"})");
  const auto s = cmd_lds(config, ctx.work / "lds");
  const double slope = s["slopes"]["pseudo"]["mean_mse_slope"].get<double>();
  const double ratio = s["mean_mse_ratio_at_max_count"].get<double>();
  Outcome o;
  o.check(std::abs(slope + 1.0) <= 0.2, "pseudo slope " + fmt(slope));
  o.check(ratio >= 10.0, "pseudo/lds mean MSE at 2^13 " + fmt(ratio));
  return o;
}

// Criterion 4 -----------------------------------------------------------------

fs::path ensure_box_rates(Context& ctx) {
  if (ctx.box_rates.empty()) {
    const auto dir = ctx.work / "rates_box";
    cmd_rates(config_from(R"({"experiment": "acceptance-rates"})"), dir);
    ctx.box_rates = dir / "rates.json";
  }
  return ctx.box_rates;
}

Outcome calibration(Context& ctx) {
  const auto s = read_summary(ensure_box_rates(ctx), "rates");
  const auto m = mlmc_fit_from_json(s["mlmc"]);
  const auto c = clmc_fit_from_json(s["clmc"]);
  Outcome o;
  o.check(m.hypotheses_hold(), "MLMC alpha " + fmt(m.alpha) + " beta " + fmt(m.beta) + " gamma " + fmt(m.gamma));
  o.check(c.hypotheses_hold(), "CLMC alpha " + fmt(c.alpha) + " beta " + fmt(c.beta) + " gamma " + fmt(c.gamma));
  const double upper = std::min(c.beta, 2.0 * c.alpha);
  bool interior = true;
  double lo = 1e300, hi = -1e300;
  for (const auto& row : s["tuning"]) {
    if (!row["clmc"].contains("r_hat")) {
      interior = false;
      continue;
    }
    const double r = row["clmc"]["r_hat"].get<double>();
    interior = interior && r > c.gamma && r < upper;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  o.check(interior, "r_hat in [" + fmt(lo) + ", " + fmt(hi) + "] inside (" + fmt(c.gamma) + ", " + fmt(upper) + ")");
  return o;
}

// Criterion 5 -----------------------------------------------------------------

Outcome unbiasedness(Context&) {
  Outcome o;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> gap(0.01, 2.0), rate(0.2, 3.0);
  double worst = 0.0;
  for (int grid = 0; grid < 100; ++grid) {
    std::vector<double> levels{0.0};
    const int n = 1 + grid % 10;
    for (int j = 0; j < n; ++j) levels.push_back(levels.back() + gap(rng));
    const double r = rate(rng);
    for (int j = 1; j <= n; ++j) {
      // Library weight for a path clipped at L.
      auto weight_at = [&](double L) {
        const auto clip = clip_and_index(levels, L);
        return clip.J >= j ? clmc_weights(levels, clip.clipped, clip.J, r)[j] : 0.0;
      };
      auto integrand = [&](double L) { return weight_at(L) * r * std::exp(-r * L); };
      const double inner = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          integrand, levels[j - 1], levels[j], 15, 1e-14);
      boost::math::quadrature::exp_sinh<double> tail;
      const double outer = tail.integrate([&](double t) { return integrand(levels[j] + t); }, 1e-14);
      worst = std::max(worst, std::abs(inner + outer - 1.0));
    }
  }
  o.check(worst <= 1e-10, "weight identity max error " + fmt(worst));

  DeterministicPathModel model({});
  const SamplePath full = model.full_path(0, 200);
  const double truth = full.qoi.back() - full.qoi.front();
  const double r = 1.5;
  ExponentialLevelSampler sampler(r, UniformSource(SourceKind::pseudo, 17));
  RunningStats y;
  for (int k = 0; k < 1000000; ++k) {
    SamplePath s = full;
    s.max_level = draw_max_level(sampler);
    finalize_path(s);
    y.add(path_contribution(s, r));
  }
  const double se = std::sqrt(y.variance() / static_cast<double>(y.count()));
  o.check(std::abs(y.mean() - truth) <= 3.0 * se,
          "deterministic path deviation " + fmt(std::abs(y.mean() - truth) / se) + " SE");

  UniformPdeModel pde(CoefficientKind::box, 300.0, 15, 11);
  const auto coeff = pde.coefficient(1, 0);
  std::vector<double> q;
  for (int l = 0; l <= 5; ++l) q.push_back(pde.qoi(l, coeff));
  double sum = 0.0;
  for (int l = 1; l <= 5; ++l) sum += q[l] - q[l - 1];
  const double tele = std::abs(sum - (q[5] - q[0])) / std::abs(q[5]);
  o.check(tele <= 8 * std::numeric_limits<double>::epsilon(), "telescoping relative error " + fmt(tele));
  return o;
}

// Criterion 6 -----------------------------------------------------------------

Outcome combinatorial(Context&) {
  Outcome o;
  std::mt19937 rng(6);

  int dorfler_bad = 0;
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_real_distribution<double> val(0.0, 1.0), th(0.05, 0.95);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> eta(len(rng));
    for (double& e : eta) e = val(rng);
    const double theta = th(rng);
    double total = 0.0;
    for (double e : eta) total += e * e;
    std::size_t best = eta.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << eta.size()); ++mask) {
      double s = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < eta.size(); ++i)
        if (mask >> i & 1) s += eta[i] * eta[i], ++count;
      if (s >= theta * total) best = std::min(best, count);
    }
    dorfler_bad += doerfler_mark(eta, theta).size() != best;
  }
  o.check(dorfler_bad == 0, "Doerfler mismatches " + std::to_string(dorfler_bad) + "/1000");

  // Sample allocation: the rounded Lagrange solution is compared with the
  // exhaustive integer optimum at the cost of one sample per level.
  int alloc_bad = 0;
  std::size_t max_shift = 0;
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double v[] = {u(rng), 0.2 * u(rng)};
    const double c[] = {10.0 * u(rng), 40.0 * u(rng)};
    const double eps = 0.05, b = 0.5, budget = (1 - b) * eps * eps;
    const auto m = optimal_samples(v, c, eps, b);
    double best_cost = 1e300;
    std::size_t b1 = 0, b2 = 0;
    for (std::size_t m1 = 2; static_cast<double>(m1) * c[0] < best_cost; ++m1) {
      const double rest = budget - v[0] / static_cast<double>(m1);
      if (rest <= 0.0) continue;
      const auto m2 = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(v[1] / rest)));
      const double cost = static_cast<double>(m1) * c[0] + static_cast<double>(m2) * c[1];
      if (cost < best_cost) best_cost = cost, b1 = m1, b2 = m2;
    }
    const double cost = static_cast<double>(m[0]) * c[0] + static_cast<double>(m[1]) * c[1];
    const bool feasible = v[0] / m[0] + v[1] / m[1] <= budget * (1 + 1e-12);
    alloc_bad += !(feasible && cost <= best_cost + c[0] + c[1]);
    max_shift = std::max({max_shift, m[0] > b1 ? m[0] - b1 : b1 - m[0], m[1] > b2 ? m[1] - b2 : b2 - m[1]});
  }
  o.check(alloc_bad == 0, "allocation mismatches " + std::to_string(alloc_bad) +
                              "/200 (largest count shift " + std::to_string(max_shift) + ")");

  MlmcRateFit mf;
  mf.alpha = 0.62;
  mf.beta = 0.97;
  mf.gamma = 0.9;
  mf.c1 = 0.4;
  mf.c2 = 0.05;
  mf.c3 = 500.0;
  int bias_bad = 0;
  for (double eps2 : {0.04, 0.0164, 0.00275}) {
    const double eps = std::sqrt(eps2);
    const auto w = optimal_bias_weight(mf, eps, 10.0);
    double best = 0.0, best_cost = 1e300;
    const int dense = 100000;
    for (int i = 0; i < dense; ++i) {
      const double bb = w.b_low + (1.0 - w.b_low) * (i + 0.5) / dense;
      const double cost = mlmc_cost_bound(mf, eps, mlmc_bias_level(mf, eps, bb), bb);
      if (cost < best_cost) best_cost = cost, best = bb;
    }
    bias_bad += !(w.b_hat > 0.0 && w.b_hat < 1.0 && std::abs(w.b_hat - best) <= (1.0 - w.b_low) / 1000.0);
  }
  o.check(bias_bad == 0, "bias weight grid mismatches " + std::to_string(bias_bad) + "/3");

  ClmcRateFit cf;
  cf.alpha = 1.33;
  cf.beta = 2.88;
  cf.gamma = 1.71;
  cf.c4 = 0.05;
  cf.c5 = 0.01;
  cf.c6 = 300.0;
  int rate_bad = 0;
  for (double eps2 : {0.04, 0.0164, 0.00275}) {
    const double eps = std::sqrt(eps2);
    const double r = optimal_rate_param(cf, eps);
    const double lo = cf.gamma, hi = std::min(cf.beta, 2 * cf.alpha);
    double best = 0.0, best_cost = 1e300;
    const int dense = 1000000;
    for (int i = 0; i < dense; ++i) {
      const double x = lo + (hi - lo) * (i + 0.5) / dense;
      const double cost = clmc_cost_bound(cf, eps, x);
      if (cost < best_cost) best_cost = cost, best = x;
    }
    rate_bad += !(r > lo && r < hi && std::abs(r - best) <= (hi - lo) / 1000.0);
  }
  o.check(rate_bad == 0, "rate parameter grid mismatches " + std::to_string(rate_bad) + "/3");
  return o;
}

// Criterion 7 -----------------------------------------------------------------

void check_compare(Outcome& o, const Json& s, const std::string& label) {
  double worst = 0.0;
  for (const auto& cell : s["cells"]) worst = std::max(worst, cell["mse_over_eps2"].get<double>());
  o.check(worst <= 1.5, label + " max MSE/eps^2 " + fmt(worst));
  for (const char* method : {"mlmc", "clmc", "qclmc"}) {
    const auto& slope = s["slopes"][method]["time_vs_mse"];
    const double v = slope.is_number() ? slope.get<double>() : std::nan("");
    o.check(std::abs(v + 1.0) <= 0.25, label + " " + method + " time-vs-MSE slope " + fmt(v));
  }
  const int wins = s["qclmc_not_worse_than_clmc"]["count"].get<int>();
  const int total = s["qclmc_not_worse_than_clmc"]["tolerances"].get<int>();
  // At least 5 of 7, scaled to the number of tolerances run.
  const int need = static_cast<int>(std::ceil(5.0 * total / 7.0));
  o.check(wins >= need, label + " QCLMC <= CLMC at " + std::to_string(wins) + "/" + std::to_string(total) +
                            " tolerances (need " + std::to_string(need) + ")");
}

Outcome comparison(Context& ctx) {
  Outcome o;
  std::vector<std::string> kinds{"box"};
  if (ctx.full) kinds.push_back("cross");
  for (const auto& kind : kinds) {
    const auto dir = ctx.work / ("compare_" + kind);
    fs::path rates;
    if (kind == "box") {
      rates = ensure_box_rates(ctx);
    } else {
      cmd_rates(config_from(R"({"experiment": "acceptance-rates", "problem": {"coefficient": "cross"}})"),
                ctx.work / "rates_cross");
      rates = ctx.work / "rates_cross" / "rates.json";
    }
    const std::string problem = R"("problem": {"coefficient": ")" + kind + R"("})";
    cmd_reference(config_from(R"({"experiment": "acceptance-reference", )" + problem + "}"), dir);
    const std::string cells = ctx.full ? "" : R"(, "tolerances": [0, 2, 4], "runs": 10)";
    const auto config = config_from(R"({"experiment": "acceptance-compare", )" + problem +
                                    R"(, "compare": {"rates": ")" + rates.string() + "\"" + cells + "}}");
    check_compare(o, cmd_compare(config, dir), kind);
  }
  return o;
}

// Criterion 8 -----------------------------------------------------------------

Outcome determinism(Context& ctx) {
  const auto config = config_from(R"({
    "experiment": "acceptance-determinism",
    "converge": {"uniform_levels": 3, "adaptive_refinements": 6, "aligned_n": [20, 40], "fit_min_dofs": 100},
    "rates": {"mlmc_levels": 4, "mlmc_samples": 8, "clmc_refinements": 16, "clmc_samples": 8},
    "lds": {"runs": 4, "max_exponent": 9},
    "reference": {"tolerance": 0.03, "l_max": 5},
    "compare": {"tolerances": [0], "runs": 2, "l_max": 6}
  })");
  const std::vector<std::string> csvs = {
      "converge.csv",        "mlmc_pilot.csv",        "clmc_grid.csv",
      "lds.csv",             "reference_levels.csv",  "reference_q0.csv",
      "compare_records.csv", "compare_mlmc_levels.csv", "compare_clmc_samples.csv"};
  std::vector<fs::path> dirs{ctx.work / "determinism_a", ctx.work / "determinism_b"};
  for (const auto& dir : dirs) {
    fs::remove_all(dir);
    cmd_converge(config, dir);
    cmd_rates(config, dir);
    cmd_lds(config, dir);
    cmd_reference(config, dir);
    cmd_compare(config, dir);
  }
  Outcome o;
  int same = 0;
  std::string differing;
  for (const auto& name : csvs) {
    const auto a = slurp(dirs[0] / name), b = slurp(dirs[1] / name);
    if (!a.empty() && a == b && a.find(config.hash()) != std::string::npos) {
      ++same;
    } else {
      differing += " " + name;
    }
  }
  o.check(same == static_cast<int>(csvs.size()),
          std::to_string(same) + "/" + std::to_string(csvs.size()) + " CSVs byte-identical" + differing);
  return o;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome(Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string work = "acceptance_work";
  bool full = false;
  std::vector<int> only;
  app.add_option("--work", work, "Scratch directory for experiment outputs");
  app.add_flag("--full", full, "Run the comparison on every tolerance and both coefficients");
  app.add_option("--only", only, "Criterion numbers to run");
  CLI11_PARSE(app, argc, argv);

  Context ctx{fs::path(work), full, {}};
  fs::create_directories(ctx.work);
  const std::vector<Criterion> criteria = {
      {1, "FEM verification", fem_verification},
      {2, "adaptive convergence", convergence},
      {3, "low-discrepancy moments", low_discrepancy},
      {4, "calibration hypotheses", calibration},
      {5, "unbiasedness oracles", unbiasedness},
      {6, "combinatorial oracles", combinatorial},
      {7, full ? "estimator comparison (full)" : "estimator comparison (smoke)", comparison},
      {8, "determinism", determinism},
  };

  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run(ctx);
    } catch (const std::exception& e) {
      out.check(false, std::string("error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string detail;
    for (const auto& n : out.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::printf("criterion %d: %s  %s [%s; %.0f s]\n", c.id, out.pass ? "PASS" : "FAIL", c.title,
                detail.c_str(), secs);
    std::fflush(stdout);
    all = all && out.pass;
  }
  return all ? 0 : 1;
}
