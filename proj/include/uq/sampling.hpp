#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace uq {

enum class SourceKind { pseudo, low_discrepancy };

std::string_view to_string(SourceKind kind);
SourceKind source_kind_from_string(std::string_view name);

/// SplitMix64 finalizer. Bijective 64-bit mixing function.
std::uint64_t mix64(std::uint64_t x);

/// Combines a seed and a stream id into an independent stream key.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream);

/// Bit-reversed 32-bit representation of the base-2 radical inverse of `index`.
std::uint32_t radical_inverse_bits(std::uint64_t index);

/// Nested uniform (Owen) scrambling of a 32-bit binary fraction. Each node of
/// the binary digit tree gets an independent flip bit derived from `seed` and
/// the digits above it.
std::uint32_t owen_scramble(std::uint32_t bits, std::uint64_t seed);

/// Uniform [0,1) stream.
///
/// pseudo: counter-based SplitMix64, value_k = mix64(key + (k+1) * 0x9e3779b97f4a7c15),
///   top 53 bits scaled by 2^-53. Period 2^64 per stream.
/// low_discrepancy: base-2 radical inverse of indices 1, 2, 3, ... (index 0 is
///   skipped), optionally Owen scrambled to 32 digits keyed by the stream key.
///
/// Sources are cheap values; give each worker its own (seed, stream) pair.
class UniformSource {
 public:
  UniformSource(SourceKind kind, std::uint64_t seed, std::uint64_t stream = 0,
                bool scrambled = true);

  double next();

  /// Value that the draw with zero-based position `position` returns; does
  /// not advance the counter.
  double at(std::uint64_t position) const;

  std::uint64_t counter() const { return counter_; }
  SourceKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  bool scrambled() const { return scrambled_; }

 private:
  SourceKind kind_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  bool scrambled_;
  std::uint64_t counter_ = 0;
};

double next_uniform(UniformSource& source);

/// Inverse CDF of Exp(r): -ln(1-x)/r. Throws DomainError unless 0 <= x < 1, r > 0.
double inv_exp_cdf(double x, double r);

/// CDF of Exp(r).
double exp_cdf(double level, double r);

class ExponentialLevelSampler {
 public:
  ExponentialLevelSampler(double rate, UniformSource source);

  double rate() const { return rate_; }
  const UniformSource& source() const { return source_; }
  UniformSource& source() { return source_; }

 private:
  double rate_;
  UniformSource source_;
};

/// inv_exp_cdf(next_uniform(source), rate).
double draw_max_level(ExponentialLevelSampler& sampler);

struct MomentMseRow {
  SourceKind kind;
  std::size_t count;
  double mean_mse;
  double variance_mse;
};

/// MSE of the sample mean and (unbiased) sample variance of Exp(rate) draws
/// against 1/rate and 1/rate^2, over `runs` independent streams per source
/// kind. Run i uses seed `seed_base + i`. Counts are evaluated as prefixes of
/// one stream per run.
std::vector<MomentMseRow> moment_mse_experiment(double rate,
                                                std::span<const std::size_t> counts,
                                                int runs, std::uint64_t seed_base = 0);

}  // namespace uq
