#include "uq/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uq/error.hpp"

namespace uq {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;
constexpr double kTwoPow32Inv = 1.0 / 4294967296.0;

}  // namespace

std::string_view to_string(SourceKind kind) {
  return kind == SourceKind::pseudo ? "pseudo" : "low-discrepancy";
}

SourceKind source_kind_from_string(std::string_view name) {
  if (name == "pseudo") return SourceKind::pseudo;
  if (name == "low-discrepancy" || name == "low_discrepancy" || name == "quasi")
    return SourceKind::low_discrepancy;
  throw DomainError("unknown source kind '" + std::string(name) + "'");
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed + kGolden) ^ mix64(stream * kGolden + 0x632be59bd9b4e019ULL));
}

std::uint32_t radical_inverse_bits(std::uint64_t index) {
  auto v = static_cast<std::uint32_t>(index);
  v = ((v >> 1) & 0x55555555u) | ((v & 0x55555555u) << 1);
  v = ((v >> 2) & 0x33333333u) | ((v & 0x33333333u) << 2);
  v = ((v >> 4) & 0x0f0f0f0fu) | ((v & 0x0f0f0f0fu) << 4);
  v = ((v >> 8) & 0x00ff00ffu) | ((v & 0x00ff00ffu) << 8);
  v = (v >> 16) | (v << 16);
  return v;
}

std::uint32_t owen_scramble(std::uint32_t bits, std::uint64_t seed) {
  std::uint32_t out = 0;
  for (int depth = 0; depth < 32; ++depth) {
    const std::uint32_t prefix = depth == 0 ? 0u : bits >> (32 - depth);
    const std::uint64_t node = (static_cast<std::uint64_t>(depth) << 32) | prefix;
    const std::uint32_t flip = static_cast<std::uint32_t>(mix64(seed ^ mix64(node + kGolden)) >> 63);
    const std::uint32_t digit = (bits >> (31 - depth)) & 1u;
    out |= (digit ^ flip) << (31 - depth);
  }
  return out;
}

UniformSource::UniformSource(SourceKind kind, std::uint64_t seed, std::uint64_t stream,
                             bool scrambled)
    : kind_(kind), seed_(seed), stream_(stream), key_(stream_key(seed, stream)),
      scrambled_(scrambled) {}

double UniformSource::at(std::uint64_t position) const {
  if (kind_ == SourceKind::pseudo) {
    const std::uint64_t raw = mix64(key_ + (position + 1) * kGolden);
    return static_cast<double>(raw >> 11) * kTwoPow53Inv;
  }
  // Index 0 (the point 0) is skipped.
  std::uint32_t bits = radical_inverse_bits(position + 1);
  if (scrambled_) bits = owen_scramble(bits, key_);
  return static_cast<double>(bits) * kTwoPow32Inv;
}

double UniformSource::next() { return at(counter_++); }

double next_uniform(UniformSource& source) { return source.next(); }

double inv_exp_cdf(double x, double r) {
  if (!(x >= 0.0 && x < 1.0)) throw DomainError("inv_exp_cdf: x must lie in [0,1)");
  if (!(r > 0.0)) throw DomainError("inv_exp_cdf: rate must be positive");
  return -std::log1p(-x) / r;
}

double exp_cdf(double level, double r) {
  if (!(r > 0.0)) throw DomainError("exp_cdf: rate must be positive");
  if (level <= 0.0) return 0.0;
  return -std::expm1(-r * level);
}

ExponentialLevelSampler::ExponentialLevelSampler(double rate, UniformSource source)
    : rate_(rate), source_(source) {
  if (!(rate > 0.0)) throw DomainError("ExponentialLevelSampler: rate must be positive");
}

double draw_max_level(ExponentialLevelSampler& sampler) {
  return inv_exp_cdf(sampler.source().next(), sampler.rate());
}

std::vector<MomentMseRow> moment_mse_experiment(double rate, std::span<const std::size_t> counts,
                                                int runs, std::uint64_t seed_base) {
  if (runs < 2) throw DomainError("moment_mse_experiment: runs must be at least 2");
  if (!(rate > 0.0)) throw DomainError("moment_mse_experiment: rate must be positive");
  if (counts.empty()) return {};
  for (std::size_t c : counts)
    if (c < 2) throw DomainError("moment_mse_experiment: counts must be at least 2");

  const double exact_mean = 1.0 / rate;
  const double exact_var = 1.0 / (rate * rate);
  const std::size_t max_count = *std::max_element(counts.begin(), counts.end());

  std::vector<MomentMseRow> rows;
  for (SourceKind kind : {SourceKind::pseudo, SourceKind::low_discrepancy}) {
    std::vector<double> mean_se(counts.size(), 0.0);
    std::vector<double> var_se(counts.size(), 0.0);
    for (int run = 0; run < runs; ++run) {
      ExponentialLevelSampler sampler(rate, UniformSource(kind, seed_base + run));
      std::vector<double> draws(max_count);
      for (auto& d : draws) d = draw_max_level(sampler);
      for (std::size_t i = 0; i < counts.size(); ++i) {
        const std::size_t n = counts[i];
        double mean = 0.0;
        for (std::size_t k = 0; k < n; ++k) mean += draws[k];
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t k = 0; k < n; ++k) ss += (draws[k] - mean) * (draws[k] - mean);
        const double var = ss / static_cast<double>(n - 1);
        mean_se[i] += (mean - exact_mean) * (mean - exact_mean);
        var_se[i] += (var - exact_var) * (var - exact_var);
      }
    }
    for (std::size_t i = 0; i < counts.size(); ++i)
      rows.push_back({kind, counts[i], mean_se[i] / runs, var_se[i] / runs});
  }
  return rows;
}

}  // namespace uq
