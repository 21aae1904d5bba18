#include "uq/coefficient.hpp"

#include <string>

#include "uq/error.hpp"

namespace uq {

namespace {

constexpr double kCenterLo = 0.4, kCenterHi = 0.6;
constexpr double kLengthLo = 0.2, kLengthHi = 0.3;

double affine(double u, double lo, double hi) { return lo + (hi - lo) * u; }

void check_contrast(double contrast) {
  if (!(contrast > 0.0)) throw DomainError("coefficient contrast P must be positive");
}

}  // namespace

std::string_view to_string(CoefficientKind kind) {
  return kind == CoefficientKind::box ? "box" : "cross";
}

CoefficientKind coefficient_kind_from_string(std::string_view name) {
  if (name == "box") return CoefficientKind::box;
  if (name == "cross") return CoefficientKind::cross;
  throw DomainError("unknown coefficient kind '" + std::string(name) + "'");
}

std::vector<double> CoefficientSample::breaks_x() const {
  if (kind == CoefficientKind::cross) return {x};
  return {x - 0.5 * length, x + 0.5 * length};
}

std::vector<double> CoefficientSample::breaks_y() const {
  if (kind == CoefficientKind::cross) return {y};
  return {y - 0.5 * length, y + 0.5 * length};
}

CoefficientSample make_box(double x, double y, double length, double contrast) {
  check_contrast(contrast);
  return {CoefficientKind::box, x, y, length, contrast};
}

CoefficientSample make_cross(double x, double y, double contrast) {
  check_contrast(contrast);
  return {CoefficientKind::cross, x, y, 0.0, contrast};
}

CoefficientSample sample_box(UniformSource& source, double contrast) {
  const double x = affine(source.next(), kCenterLo, kCenterHi);
  const double y = affine(source.next(), kCenterLo, kCenterHi);
  const double l = affine(source.next(), kLengthLo, kLengthHi);
  return make_box(x, y, l, contrast);
}

CoefficientSample sample_cross(UniformSource& source, double contrast) {
  const double x = affine(source.next(), kCenterLo, kCenterHi);
  const double y = affine(source.next(), kCenterLo, kCenterHi);
  return make_cross(x, y, contrast);
}

CoefficientSample sample_coefficient(CoefficientKind kind, UniformSource& source, double contrast) {
  return kind == CoefficientKind::box ? sample_box(source, contrast)
                                      : sample_cross(source, contrast);
}

double eval(const CoefficientSample& s, Point p) {
  bool in_t1 = false;
  if (s.kind == CoefficientKind::box) {
    const double h = 0.5 * s.length;
    const bool inside = p.x >= s.x - h && p.x <= s.x + h && p.y >= s.y - h && p.y <= s.y + h;
    in_t1 = !inside;
  } else {
    in_t1 = (p.x < s.x && p.y < s.y) || (p.x > s.x && p.y > s.y);
  }
  return in_t1 ? s.contrast : 1.0 / s.contrast;
}

double element_value(const CoefficientSample& sample, const TriMesh& mesh, int t) {
  return eval(sample, mesh.barycenter(t));
}

std::vector<double> element_values(const CoefficientSample& sample, const TriMesh& mesh) {
  std::vector<double> out(mesh.num_triangles());
  for (std::size_t t = 0; t < out.size(); ++t)
    out[t] = element_value(sample, mesh, static_cast<int>(t));
  return out;
}

}  // namespace uq
