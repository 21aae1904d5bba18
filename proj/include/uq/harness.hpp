#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uq/clmc.hpp"
#include "uq/coefficient.hpp"
#include "uq/fem.hpp"
#include "uq/mlmc.hpp"

namespace uq::harness {

using Json = nlohmann::ordered_json;

struct ProblemConfig {
  CoefficientKind kind = CoefficientKind::box;
  double contrast = 300.0;
  int base_n = 15;  // level-0 cells per direction
  double theta = 0.5;
  std::size_t dof_max = 200000;
  int max_refinements = 60;
  SolverKind solver = SolverKind::cholesky;
  double s = 2.25;
};

struct ConvergeConfig {
  double x = 0.4, y = 0.6, length = 0.3;
  int uniform_levels = 8;
  int adaptive_refinements = 30;
  std::vector<int> aligned_n = {100, 200, 400, 800};
  std::size_t fit_min_dofs = 1000;
};

struct RatesConfig {
  int mlmc_levels = 6;
  std::size_t mlmc_samples = 100;
  int clmc_refinements = 40;
  std::size_t clmc_samples = 100;
  int grid_points = 50;
};

struct LdsConfig {
  double rate = 1.5;
  int runs = 20;
  int min_exponent = 6;
  int max_exponent = 13;
};

struct ReferenceConfig {
  double tolerance = 0.0025;
  std::size_t m_ini = 20;
  int l_max = 10;
  std::uint64_t seed = 1000003;
};

struct CompareConfig {
  std::vector<std::string> methods = {"mlmc", "clmc", "qclmc"};
  double eps2_0 = 0.04;
  double ratio = 0.8;  // eps_i^2 = eps2_0 * ratio^(2i)
  std::vector<int> tolerances = {0, 1, 2, 3, 4, 5, 6};
  int runs = 20;
  std::size_t m_ini = 20;
  int l_max = 10;
  std::string rates;      // empty: <out>/rates.json
  std::string reference;  // empty: <out>/reference.json
};

struct ExperimentConfig {
  std::string experiment = "default";
  std::uint64_t seed = 1;
  std::uint64_t scramble_seed = 2;
  int threads = 0;  // 0: hardware concurrency
  bool full_scale = false;
  ProblemConfig problem;
  ConvergeConfig converge;
  RatesConfig rates;
  LdsConfig lds;
  ReferenceConfig reference;
  CompareConfig compare;

  /// Effective configuration with every default filled in.
  Json to_json() const;
  /// FNV-1a of to_json().dump(), 16 hex digits.
  std::string hash() const;
  int worker_count() const;
};

/// Parses a config document. Unknown keys, wrong types and out-of-range
/// values throw ConfigError; syntax errors report line and column.
/// full_scale switches the defaults before the document is applied, so
/// explicit keys still win.
ExperimentConfig parse_config(const std::string& text, bool full_scale = false);
ExperimentConfig load_config(const std::filesystem::path& file, bool full_scale = false);

double tolerance_eps2(const CompareConfig& c, int index);

/// Each command writes into `out` (created if missing) and returns its JSON summary.
Json cmd_converge(const ExperimentConfig& config, const std::filesystem::path& out);
Json cmd_rates(const ExperimentConfig& config, const std::filesystem::path& out);
Json cmd_lds(const ExperimentConfig& config, const std::filesystem::path& out);
Json cmd_reference(const ExperimentConfig& config, const std::filesystem::path& out);
Json cmd_compare(const ExperimentConfig& config, const std::filesystem::path& out);

/// Rate fits as stored in rates.json.
Json to_json(const MlmcRateFit& fit);
Json to_json(const ClmcRateFit& fit);
MlmcRateFit mlmc_fit_from_json(const Json& j);
ClmcRateFit clmc_fit_from_json(const Json& j);

/// Reads a file written by a command; missing file or field is a ConfigError
/// naming `producer`, the command that writes it.
Json read_summary(const std::filesystem::path& file, const std::string& producer);

/// Minimal CSV writer. The first line is "# config_hash=<h>,seed=<s>"; doubles
/// are printed with 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file, const ExperimentConfig& config,
            const std::vector<std::string>& columns);
  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(long long v);
  CsvWriter& operator<<(std::size_t v);
  CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(const std::string& v);
  CsvWriter& operator<<(const char* v) { return *this << std::string(v); }
  void end_row();

 private:
  void field(const std::string& text);
  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

/// Writes summary with config_hash, seed and experiment fields prepended.
void write_summary(const std::filesystem::path& file, const ExperimentConfig& config,
                   const Json& summary);

}  // namespace uq::harness
