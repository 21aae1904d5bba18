#pragma once

#include <string_view>
#include <vector>

#include "uq/mesh.hpp"
#include "uq/sampling.hpp"

namespace uq {

enum class CoefficientKind { box, cross };

std::string_view to_string(CoefficientKind kind);
CoefficientKind coefficient_kind_from_string(std::string_view name);

/// One realization of the two-valued jump coefficient: P on the region T1,
/// 1/P on T2.
///
/// box:   T2 is the closed square of edge `length` centred at (x, y).
/// cross: lines at x and y split the square into quadrants; T1 is the
///        lower-left and upper-right quadrant (open), T2 the rest.
struct CoefficientSample {
  CoefficientKind kind = CoefficientKind::box;
  double x = 0.5;
  double y = 0.5;
  double length = 0.25;  // box only
  double contrast = 1.0;

  /// Lines the coefficient jumps across, for building aligned meshes.
  std::vector<double> breaks_x() const;
  std::vector<double> breaks_y() const;
};

/// Draw order: x, y, length.
CoefficientSample sample_box(UniformSource& source, double contrast);
/// Draw order: x, y.
CoefficientSample sample_cross(UniformSource& source, double contrast);
CoefficientSample sample_coefficient(CoefficientKind kind, UniformSource& source, double contrast);

CoefficientSample make_box(double x, double y, double length, double contrast);
CoefficientSample make_cross(double x, double y, double contrast);

double eval(const CoefficientSample& sample, Point p);

/// a_K: the coefficient at the barycenter of triangle t.
double element_value(const CoefficientSample& sample, const TriMesh& mesh, int t);
std::vector<double> element_values(const CoefficientSample& sample, const TriMesh& mesh);

}  // namespace uq
