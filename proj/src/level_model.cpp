#include "uq/level_model.hpp"

#include <cmath>
#include <numbers>

#include "uq/sampling.hpp"

namespace uq {

std::uint64_t level_stream(int level, std::uint64_t index) {
  return (static_cast<std::uint64_t>(level) << 48) ^ index;
}

UniformPdeModel::UniformPdeModel(CoefficientKind kind, double contrast, int base_n,
                                 std::uint64_t seed, SolverOptions solver)
    : kind_(kind), contrast_(contrast), base_n_(base_n), seed_(seed), solver_(solver) {}

MeshPtr UniformPdeModel::mesh(int level) {
  auto it = meshes_.find(level);
  if (it == meshes_.end())
    it = meshes_.emplace(level, std::make_shared<const TriMesh>(uniform_family(level, base_n_)))
             .first;
  return it->second;
}

CoefficientSample UniformPdeModel::coefficient(int level, std::uint64_t index) const {
  UniformSource source(SourceKind::pseudo, seed_, level_stream(level, index));
  return sample_coefficient(kind_, source, contrast_);
}

double UniformPdeModel::qoi(int level, const CoefficientSample& coeff) {
  return h1_norm(solve_pde(mesh(level), coeff, SourceTerm(1.0), solver_));
}

LevelSample UniformPdeModel::sample(int level, std::uint64_t index) {
  const auto coeff = coefficient(level, index);
  LevelSample out;
  out.fine = qoi(level, coeff);
  out.coarse = qoi(level - 1, coeff);
  out.cost_dofs = pair_dofs(level);
  return out;
}

double UniformPdeModel::single(int level, std::uint64_t index) {
  return qoi(level, coefficient(level, index));
}

AlignedPdeModel::AlignedPdeModel(CoefficientKind kind, double contrast, int base_n,
                                 std::uint64_t seed, SolverOptions solver)
    : kind_(kind), contrast_(contrast), base_n_(base_n), seed_(seed), solver_(solver) {}

CoefficientSample AlignedPdeModel::coefficient(int level, std::uint64_t index) const {
  UniformSource source(SourceKind::pseudo, seed_, level_stream(level, index));
  return sample_coefficient(kind_, source, contrast_);
}

double AlignedPdeModel::qoi(int level, const CoefficientSample& coeff) const {
  const auto bx = coeff.breaks_x();
  const auto by = coeff.breaks_y();
  auto mesh = std::make_shared<const TriMesh>(
      aligned_structured_mesh(bx, by, uniform_family_resolution(level, base_n_)));
  return h1_norm(solve_pde(std::move(mesh), coeff, SourceTerm(1.0), solver_));
}

LevelSample AlignedPdeModel::sample(int level, std::uint64_t index) {
  const auto coeff = coefficient(level, index);
  return {qoi(level, coeff), qoi(level - 1, coeff), pair_dofs(level)};
}

double AlignedPdeModel::single(int level, std::uint64_t index) {
  return qoi(level, coefficient(level, index));
}

double AlignedPdeModel::dofs(int level) {
  const double n = uniform_family_resolution(level, base_n_) + 1.0;
  return n * n;
}

namespace {

// Box-Muller pair from the first two draws of the stream.
std::pair<double, double> normal_pair(std::uint64_t seed, std::uint64_t stream) {
  UniformSource source(SourceKind::pseudo, seed, stream);
  const double u1 = 1.0 - source.next();  // (0,1]
  const double u2 = source.next();
  const double rad = std::sqrt(-2.0 * std::log(u1));
  return {rad * std::cos(2.0 * std::numbers::pi * u2), rad * std::sin(2.0 * std::numbers::pi * u2)};
}

}  // namespace

double SyntheticLevelModel::value(int level, double x, double z) const {
  const double l = static_cast<double>(level);
  return p_.q_inf + x - p_.a * std::pow(p_.s, -p_.alpha * l) +
         p_.sigma * std::pow(p_.s, -0.5 * p_.beta * l) * z;
}

LevelSample SyntheticLevelModel::sample(int level, std::uint64_t index) {
  const auto [x, z] = normal_pair(seed_, level_stream(level, index));
  return {value(level, x, z), value(level - 1, x, z), pair_dofs(level)};
}

double SyntheticLevelModel::single(int level, std::uint64_t index) {
  const auto [x, z] = normal_pair(seed_, level_stream(level, index));
  return value(level, x, z);
}

double SyntheticLevelModel::dofs(int level) {
  return p_.n0 * std::pow(p_.s, static_cast<double>(level));
}

double SyntheticLevelModel::expected_difference(int level) const {
  return p_.a * (1.0 - std::pow(p_.s, -p_.alpha * static_cast<double>(level)));
}

}  // namespace uq
