#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "uq/error.hpp"
#include "uq/harness.hpp"

namespace uq::harness {

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no inf/nan; keep such values visible as null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_or_nan(const Json& j) {
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

Json fit_json(const LinearFit& f) {
  return {{"slope", number(f.slope)},
          {"intercept", number(f.intercept)},
          {"r2", number(f.r2)},
          {"points", f.points}};
}

LinearFit fit_from(const Json& j) {
  LinearFit f;
  f.slope = number_or_nan(j.at("slope"));
  f.intercept = number_or_nan(j.at("intercept"));
  f.r2 = number_or_nan(j.at("r2"));
  f.points = j.at("points").get<std::size_t>();
  return f;
}

}  // namespace

CsvWriter::CsvWriter(const std::filesystem::path& file, const ExperimentConfig& config,
                     const std::vector<std::string>& columns)
    : out_(file, std::ios::binary | std::ios::trunc), columns_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot write " + file.string());
  out_ << "# config_hash=" << config.hash() << ",seed=" << config.seed << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

void CsvWriter::field(const std::string& text) {
  if (in_row_ == columns_) throw std::logic_error("CsvWriter: too many fields in row");
  if (in_row_++) out_ << ',';
  out_ << text;
}

CsvWriter& CsvWriter::operator<<(double v) {
  field(format_double(v));
  return *this;
}

CsvWriter& CsvWriter::operator<<(long long v) {
  field(std::to_string(v));
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::size_t v) {
  field(std::to_string(v));
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  field(v);
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw std::logic_error("CsvWriter: short row");
  out_ << '\n';
  in_row_ = 0;
  if (!out_) throw std::runtime_error("CsvWriter: write failed");
}

void write_summary(const std::filesystem::path& file, const ExperimentConfig& config,
                   const Json& summary) {
  Json j;
  j["config_hash"] = config.hash();
  j["seed"] = config.seed;
  j["scramble_seed"] = config.scramble_seed;
  j["experiment"] = config.experiment;
  for (const auto& [k, v] : summary.items()) j[k] = v;
  j["config"] = config.to_json();
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

Json read_summary(const std::filesystem::path& file, const std::string& producer) {
  std::ifstream in(file, std::ios::binary);
  if (!in)
    throw ConfigError("missing " + file.string() + "; run `uq " + producer + "` first");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("unreadable " + file.string() + " (" + e.what() + "); rerun `uq " +
                      producer + "`");
  }
}

Json to_json(const MlmcRateFit& fit) {
  return {{"alpha", number(fit.alpha)},
          {"beta", number(fit.beta)},
          {"gamma", number(fit.gamma)},
          {"c1", number(fit.c1)},
          {"c2", number(fit.c2)},
          {"c3", number(fit.c3)},
          {"s", fit.s},
          {"level_lo", fit.level_lo},
          {"level_hi", fit.level_hi},
          {"samples", fit.samples},
          {"mean_fit", fit_json(fit.mean_fit)},
          {"variance_fit", fit_json(fit.variance_fit)},
          {"cost_fit", fit_json(fit.cost_fit)},
          {"hypotheses_hold", fit.hypotheses_hold()},
          {"warnings", fit.warnings}};
}

Json to_json(const ClmcRateFit& fit) {
  return {{"alpha", number(fit.alpha)},
          {"beta", number(fit.beta)},
          {"gamma", number(fit.gamma)},
          {"c4", number(fit.c4)},
          {"c5", number(fit.c5)},
          {"c6", number(fit.c6)},
          {"level_lo", fit.level_lo},
          {"level_hi", fit.level_hi},
          {"samples", fit.samples},
          {"mean_fit", fit_json(fit.mean_fit)},
          {"variance_fit", fit_json(fit.variance_fit)},
          {"cost_fit", fit_json(fit.cost_fit)},
          {"hypotheses_hold", fit.hypotheses_hold()},
          {"warnings", fit.warnings}};
}

MlmcRateFit mlmc_fit_from_json(const Json& j) {
  try {
    MlmcRateFit f;
    f.alpha = number_or_nan(j.at("alpha"));
    f.beta = number_or_nan(j.at("beta"));
    f.gamma = number_or_nan(j.at("gamma"));
    f.c1 = number_or_nan(j.at("c1"));
    f.c2 = number_or_nan(j.at("c2"));
    f.c3 = number_or_nan(j.at("c3"));
    f.s = j.at("s").get<double>();
    f.level_lo = j.at("level_lo").get<int>();
    f.level_hi = j.at("level_hi").get<int>();
    f.samples = j.at("samples").get<std::size_t>();
    f.mean_fit = fit_from(j.at("mean_fit"));
    f.variance_fit = fit_from(j.at("variance_fit"));
    f.cost_fit = fit_from(j.at("cost_fit"));
    f.warnings = j.at("warnings").get<std::vector<std::string>>();
    return f;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed MLMC rate fit: ") + e.what());
  }
}

ClmcRateFit clmc_fit_from_json(const Json& j) {
  try {
    ClmcRateFit f;
    f.alpha = number_or_nan(j.at("alpha"));
    f.beta = number_or_nan(j.at("beta"));
    f.gamma = number_or_nan(j.at("gamma"));
    f.c4 = number_or_nan(j.at("c4"));
    f.c5 = number_or_nan(j.at("c5"));
    f.c6 = number_or_nan(j.at("c6"));
    f.level_lo = j.at("level_lo").get<double>();
    f.level_hi = j.at("level_hi").get<double>();
    f.samples = j.at("samples").get<std::size_t>();
    f.mean_fit = fit_from(j.at("mean_fit"));
    f.variance_fit = fit_from(j.at("variance_fit"));
    f.cost_fit = fit_from(j.at("cost_fit"));
    f.warnings = j.at("warnings").get<std::vector<std::string>>();
    return f;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed CLMC rate fit: ") + e.what());
  }
}

}  // namespace uq::harness
