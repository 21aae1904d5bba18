#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "uq/coefficient.hpp"
#include "uq/fem.hpp"
#include "uq/mesh.hpp"

namespace uq {

/// Q_l and Q_{l-1} evaluated on one random input.
struct LevelSample {
  double fine = 0.0;
  double coarse = 0.0;
  double cost_dofs = 0.0;
  double difference() const { return fine - coarse; }
};

/// Source of coupled level pairs for MLMC. Sample `index` on `level` is a
/// deterministic function of (model seed, level, index).
class LevelModel {
 public:
  virtual ~LevelModel() = default;
  /// level >= 1.
  virtual LevelSample sample(int level, std::uint64_t index) = 0;
  /// Q_level alone, for plain Monte Carlo on one level.
  virtual double single(int level, std::uint64_t index) = 0;
  virtual double dofs(int level) = 0;
  double pair_dofs(int level) { return dofs(level) + dofs(level - 1); }
};

/// Stream id of the index-th random input on a level. Streams of distinct
/// (level, index) pairs never coincide.
std::uint64_t level_stream(int level, std::uint64_t index);

/// Random jump-coefficient PDE solved on the uniform mesh family.
class UniformPdeModel : public LevelModel {
 public:
  UniformPdeModel(CoefficientKind kind, double contrast, int base_n, std::uint64_t seed,
                  SolverOptions solver = {});

  LevelSample sample(int level, std::uint64_t index) override;
  double single(int level, std::uint64_t index) override;
  double dofs(int level) override { return static_cast<double>(mesh(level)->num_vertices()); }

  CoefficientSample coefficient(int level, std::uint64_t index) const;
  double qoi(int level, const CoefficientSample& coeff);
  MeshPtr mesh(int level);

 private:
  CoefficientKind kind_;
  double contrast_;
  int base_n_;
  std::uint64_t seed_;
  SolverOptions solver_;
  std::map<int, MeshPtr> meshes_;
};

/// Same random PDE on meshes aligned with the coefficient jumps; level l uses
/// at least round(base_n * 1.5^l) cells per direction. Meshes are built per sample.
class AlignedPdeModel : public LevelModel {
 public:
  AlignedPdeModel(CoefficientKind kind, double contrast, int base_n, std::uint64_t seed,
                  SolverOptions solver = {});

  LevelSample sample(int level, std::uint64_t index) override;
  double single(int level, std::uint64_t index) override;
  /// Nominal vertex count (the breaks add up to four gridlines per direction).
  double dofs(int level) override;

  CoefficientSample coefficient(int level, std::uint64_t index) const;
  double qoi(int level, const CoefficientSample& coeff) const;

 private:
  CoefficientKind kind_;
  double contrast_;
  int base_n_;
  std::uint64_t seed_;
  SolverOptions solver_;
};

/// Q_l = q_inf + X - a s^{-alpha l} + sigma s^{-beta l / 2} Z with X, Z ~ N(0,1)
/// drawn once per (level, index) and shared by the fine and coarse value.
/// Mean differences decay like s^{-alpha l}, their variance like s^{-beta l};
/// level l costs n0 s^l.
class SyntheticLevelModel : public LevelModel {
 public:
  struct Params {
    double q_inf = 1.0;
    double a = 0.5;
    double s = 2.25;
    double alpha = 1.0;
    double beta = 2.0;
    double sigma = 0.5;
    double n0 = 256.0;
  };
  SyntheticLevelModel(Params params, std::uint64_t seed) : p_(params), seed_(seed) {}

  LevelSample sample(int level, std::uint64_t index) override;
  double single(int level, std::uint64_t index) override;
  double dofs(int level) override;

  /// E[Q_L - Q_0].
  double expected_difference(int level) const;
  const Params& params() const { return p_; }

 private:
  double value(int level, double x, double z) const;

  Params p_;
  std::uint64_t seed_;
};

}  // namespace uq
