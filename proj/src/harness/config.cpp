#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "uq/error.hpp"
#include "uq/harness.hpp"

namespace uq::harness {

namespace {

std::string solver_name(SolverKind k) { return k == SolverKind::cg ? "cg" : "cholesky"; }

// Reads the keys of one JSON object into typed fields and rejects leftovers.
class Section {
 public:
  Section(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("", "expected an object");
  }

  void read(const char* key, double& v) {
    if (const Json* j = take(key)) {
      if (!j->is_number()) fail(key, "expected a number");
      v = j->get<double>();
    }
  }
  void read(const char* key, int& v) {
    if (const Json* j = take(key)) {
      if (!j->is_number_integer()) fail(key, "expected an integer");
      v = j->get<int>();
    }
  }
  void read(const char* key, std::uint64_t& v) {
    if (const Json* j = take(key)) {
      if (!j->is_number_unsigned()) fail(key, "expected a non-negative integer");
      v = j->get<std::uint64_t>();
    }
  }
  void read(const char* key, bool& v) {
    if (const Json* j = take(key)) {
      if (!j->is_boolean()) fail(key, "expected true or false");
      v = j->get<bool>();
    }
  }
  void read(const char* key, std::string& v) {
    if (const Json* j = take(key)) {
      if (!j->is_string()) fail(key, "expected a string");
      v = j->get<std::string>();
    }
  }
  void read(const char* key, std::vector<int>& v) {
    if (const Json* j = take(key)) {
      if (!j->is_array()) fail(key, "expected an array of integers");
      v.clear();
      for (const auto& e : *j) {
        if (!e.is_number_integer()) fail(key, "expected an array of integers");
        v.push_back(e.get<int>());
      }
    }
  }
  void read(const char* key, std::vector<std::string>& v) {
    if (const Json* j = take(key)) {
      if (!j->is_array()) fail(key, "expected an array of strings");
      v.clear();
      for (const auto& e : *j) {
        if (!e.is_string()) fail(key, "expected an array of strings");
        v.push_back(e.get<std::string>());
      }
    }
  }
  void read(const char* key, CoefficientKind& v) {
    std::string name = std::string(to_string(v));
    read(key, name);
    if (name == "box") v = CoefficientKind::box;
    else if (name == "cross") v = CoefficientKind::cross;
    else fail(key, "must be \"box\" or \"cross\"");
  }
  void read(const char* key, SolverKind& v) {
    std::string name = solver_name(v);
    read(key, name);
    if (name == "cholesky") v = SolverKind::cholesky;
    else if (name == "cg") v = SolverKind::cg;
    else fail(key, "must be \"cholesky\" or \"cg\"");
  }

  const Json* child(const char* key) { return take(key); }

  void finish() const {
    for (const auto& [key, value] : node_.items())
      if (!seen_.count(key)) fail(key, "unknown key");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::string where = path_;
    if (!key.empty()) where += where.empty() ? key : "." + key;
    throw ConfigError("config: " + (where.empty() ? std::string("<root>") : where) + ": " + what);
  }

 private:
  const Json* take(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  const Json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_size(Section& sec, const char* key, std::size_t& v) {
  std::uint64_t u = v;
  sec.read(key, u);
  v = static_cast<std::size_t>(u);
}

template <class F>
void with_section(Section& parent, const char* key, F&& body) {
  if (const Json* j = parent.child(key)) {
    Section sec(*j, key);
    body(sec);
    sec.finish();
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

void validate(const ExperimentConfig& c) {
  const auto& p = c.problem;
  require(p.contrast > 0.0 && std::isfinite(p.contrast), "problem.contrast must be positive");
  require(p.base_n >= 1, "problem.base_n must be at least 1");
  require(p.theta > 0.0 && p.theta < 1.0, "problem.theta must lie in (0,1)");
  require(p.dof_max >= 16, "problem.dof_max must be at least 16");
  require(p.max_refinements >= 1, "problem.max_refinements must be at least 1");
  require(p.s > 1.0, "problem.s must exceed 1");
  require(c.threads >= 0, "threads must be non-negative");

  const auto& v = c.converge;
  require(v.x > 0.0 && v.x < 1.0 && v.y > 0.0 && v.y < 1.0, "converge.x and converge.y must lie in (0,1)");
  require(v.length > 0.0 && v.length < 1.0, "converge.length must lie in (0,1)");
  require(v.uniform_levels >= 3, "converge.uniform_levels must be at least 3");
  require(v.adaptive_refinements >= 3, "converge.adaptive_refinements must be at least 3");
  require(v.aligned_n.size() >= 2, "converge.aligned_n needs at least two resolutions");
  for (std::size_t i = 0; i < v.aligned_n.size(); ++i) {
    require(v.aligned_n[i] >= 1, "converge.aligned_n entries must be positive");
    if (i > 0)
      require(v.aligned_n[i] == 2 * v.aligned_n[i - 1], "converge.aligned_n must double at each step");
  }

  const auto& r = c.rates;
  require(r.mlmc_levels >= 3, "rates.mlmc_levels must be at least 3");
  require(r.mlmc_samples >= 2, "rates.mlmc_samples must be at least 2");
  require(r.clmc_refinements >= 2, "rates.clmc_refinements must be at least 2");
  require(r.clmc_samples >= 2, "rates.clmc_samples must be at least 2");
  require(r.grid_points >= 3, "rates.grid_points must be at least 3");

  const auto& l = c.lds;
  require(l.rate > 0.0, "lds.rate must be positive");
  require(l.runs >= 2, "lds.runs must be at least 2");
  require(l.min_exponent >= 1 && l.max_exponent >= l.min_exponent + 2 && l.max_exponent <= 24,
          "lds exponents must satisfy 1 <= min_exponent <= max_exponent - 2, max_exponent <= 24");

  const auto& f = c.reference;
  require(f.tolerance > 0.0, "reference.tolerance must be positive");
  require(f.m_ini >= 2, "reference.m_ini must be at least 2");
  require(f.l_max >= 3, "reference.l_max must be at least 3");

  const auto& m = c.compare;
  require(!m.methods.empty(), "compare.methods must not be empty");
  for (const auto& name : m.methods)
    require(name == "mlmc" || name == "clmc" || name == "qclmc",
            "compare.methods entries must be mlmc, clmc or qclmc");
  require(m.eps2_0 > 0.0, "compare.eps2_0 must be positive");
  require(m.ratio > 0.0 && m.ratio < 1.0, "compare.ratio must lie in (0,1)");
  require(!m.tolerances.empty(), "compare.tolerances must not be empty");
  for (int i : m.tolerances) require(i >= 0 && i <= 40, "compare.tolerances entries must lie in 0..40");
  require(m.runs >= 2, "compare.runs must be at least 2");
  require(m.m_ini >= 2, "compare.m_ini must be at least 2");
  require(m.l_max >= 3, "compare.l_max must be at least 3");
}

std::string line_diagnostic(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  // nlohmann reports the position just past the offending character.
  if (col > 1) --col;
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

Json ExperimentConfig::to_json() const {
  Json j;
  j["experiment"] = experiment;
  j["seed"] = seed;
  j["scramble_seed"] = scramble_seed;
  j["threads"] = threads;
  j["full_scale"] = full_scale;
  j["problem"] = {{"coefficient", std::string(uq::to_string(problem.kind))},
                  {"contrast", problem.contrast},
                  {"base_n", problem.base_n},
                  {"theta", problem.theta},
                  {"dof_max", problem.dof_max},
                  {"max_refinements", problem.max_refinements},
                  {"solver", solver_name(problem.solver)},
                  {"s", problem.s}};
  j["converge"] = {{"x", converge.x},
                   {"y", converge.y},
                   {"length", converge.length},
                   {"uniform_levels", converge.uniform_levels},
                   {"adaptive_refinements", converge.adaptive_refinements},
                   {"aligned_n", converge.aligned_n},
                   {"fit_min_dofs", converge.fit_min_dofs}};
  j["rates"] = {{"mlmc_levels", rates.mlmc_levels},
                {"mlmc_samples", rates.mlmc_samples},
                {"clmc_refinements", rates.clmc_refinements},
                {"clmc_samples", rates.clmc_samples},
                {"grid_points", rates.grid_points}};
  j["lds"] = {{"rate", lds.rate},
              {"runs", lds.runs},
              {"min_exponent", lds.min_exponent},
              {"max_exponent", lds.max_exponent}};
  j["reference"] = {{"tolerance", reference.tolerance},
                    {"m_ini", reference.m_ini},
                    {"l_max", reference.l_max},
                    {"seed", reference.seed}};
  j["compare"] = {{"methods", compare.methods},
                  {"eps2_0", compare.eps2_0},
                  {"ratio", compare.ratio},
                  {"tolerances", compare.tolerances},
                  {"runs", compare.runs},
                  {"m_ini", compare.m_ini},
                  {"l_max", compare.l_max},
                  {"rates", compare.rates},
                  {"reference", compare.reference}};
  return j;
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int ExperimentConfig::worker_count() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentConfig parse_config(const std::string& text, bool full_scale) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Keep only the detail after nlohmann's own position prefix.
    std::string detail = e.what();
    if (auto col = detail.find("column"); col != std::string::npos) {
      if (auto sep = detail.find(": ", col); sep != std::string::npos) detail = detail.substr(sep + 2);
    }
    throw ConfigError("config: parse error at " + line_diagnostic(text, e.byte) + ": " + detail);
  }

  // A document written by to_json() carries full_scale; the flag may also come
  // from the command line.
  if (doc.is_object() && doc.contains("full_scale") && doc["full_scale"].is_boolean())
    full_scale = full_scale || doc["full_scale"].get<bool>();

  ExperimentConfig c;
  if (full_scale) {
    c.rates.mlmc_samples = 1000;
    c.rates.clmc_samples = 1000;
    c.compare.runs = 100;
  }

  Section root(doc, "");
  root.read("full_scale", c.full_scale);
  c.full_scale = full_scale;
  root.read("experiment", c.experiment);
  root.read("seed", c.seed);
  root.read("scramble_seed", c.scramble_seed);
  root.read("threads", c.threads);
  with_section(root, "problem", [&](Section& s) {
    s.read("coefficient", c.problem.kind);
    s.read("contrast", c.problem.contrast);
    s.read("base_n", c.problem.base_n);
    s.read("theta", c.problem.theta);
    read_size(s, "dof_max", c.problem.dof_max);
    s.read("max_refinements", c.problem.max_refinements);
    s.read("solver", c.problem.solver);
    s.read("s", c.problem.s);
  });
  with_section(root, "converge", [&](Section& s) {
    s.read("x", c.converge.x);
    s.read("y", c.converge.y);
    s.read("length", c.converge.length);
    s.read("uniform_levels", c.converge.uniform_levels);
    s.read("adaptive_refinements", c.converge.adaptive_refinements);
    s.read("aligned_n", c.converge.aligned_n);
    read_size(s, "fit_min_dofs", c.converge.fit_min_dofs);
  });
  with_section(root, "rates", [&](Section& s) {
    s.read("mlmc_levels", c.rates.mlmc_levels);
    read_size(s, "mlmc_samples", c.rates.mlmc_samples);
    s.read("clmc_refinements", c.rates.clmc_refinements);
    read_size(s, "clmc_samples", c.rates.clmc_samples);
    s.read("grid_points", c.rates.grid_points);
  });
  with_section(root, "lds", [&](Section& s) {
    s.read("rate", c.lds.rate);
    s.read("runs", c.lds.runs);
    s.read("min_exponent", c.lds.min_exponent);
    s.read("max_exponent", c.lds.max_exponent);
  });
  with_section(root, "reference", [&](Section& s) {
    s.read("tolerance", c.reference.tolerance);
    read_size(s, "m_ini", c.reference.m_ini);
    s.read("l_max", c.reference.l_max);
    s.read("seed", c.reference.seed);
  });
  with_section(root, "compare", [&](Section& s) {
    s.read("methods", c.compare.methods);
    s.read("eps2_0", c.compare.eps2_0);
    s.read("ratio", c.compare.ratio);
    s.read("tolerances", c.compare.tolerances);
    s.read("runs", c.compare.runs);
    read_size(s, "m_ini", c.compare.m_ini);
    s.read("l_max", c.compare.l_max);
    s.read("rates", c.compare.rates);
    s.read("reference", c.compare.reference);
  });
  root.finish();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file, bool full_scale) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), full_scale);
}

double tolerance_eps2(const CompareConfig& c, int index) {
  return c.eps2_0 * std::pow(c.ratio, 2.0 * index);
}

}  // namespace uq::harness
