#include <doctest.h>

#include <cmath>
#include <random>

#include "uq/coefficient.hpp"
#include "uq/error.hpp"

using namespace uq;

// The unscrambled radical-inverse stream draws 0.5, 0.25, 0.75 first.

TEST_CASE("box draws map uniforms affinely") {
  UniformSource s(SourceKind::low_discrepancy, 0, 0, false);
  const auto b = sample_box(s, 300.0);
  CHECK(b.kind == CoefficientKind::box);
  CHECK(b.x == doctest::Approx(0.5));
  CHECK(b.y == doctest::Approx(0.45));
  CHECK(b.length == doctest::Approx(0.275));
  CHECK(s.counter() == 3);
}

TEST_CASE("cross draws map uniforms affinely") {
  UniformSource s(SourceKind::low_discrepancy, 0, 0, false);
  const auto c = sample_cross(s, 300.0);
  CHECK(c.kind == CoefficientKind::cross);
  CHECK(c.x == doctest::Approx(0.5));
  CHECK(c.y == doctest::Approx(0.45));
  CHECK(s.counter() == 2);
}

TEST_CASE("sampled parameters stay in their supports") {
  UniformSource s(SourceKind::pseudo, 9);
  for (int i = 0; i < 2000; ++i) {
    const auto b = sample_box(s, 300.0);
    CHECK((b.x >= 0.4 && b.x <= 0.6 && b.y >= 0.4 && b.y <= 0.6));
    CHECK((b.length >= 0.2 && b.length <= 0.3));
    CHECK(b.x - b.length / 2 >= 0.25 - 1e-15);
    CHECK(b.x + b.length / 2 <= 0.75 + 1e-15);
    CHECK(b.y - b.length / 2 >= 0.25 - 1e-15);
    CHECK(b.y + b.length / 2 <= 0.75 + 1e-15);
  }
}

TEST_CASE("box evaluation") {
  const auto b = make_box(0.5, 0.5, 0.2, 300.0);
  CHECK(eval(b, {0.5, 0.5}) == doctest::Approx(1.0 / 300.0));
  CHECK(eval(b, {0.1, 0.1}) == 300.0);
  // Closed box.
  CHECK(eval(b, {0.4, 0.5}) == doctest::Approx(1.0 / 300.0));
  const auto lo = make_box(0.4, 0.4, 0.2, 300.0);
  CHECK(lo.x == 0.4);
  CHECK(lo.length == 0.2);
}

TEST_CASE("cross evaluation") {
  const auto c = make_cross(0.5, 0.5, 300.0);
  CHECK(eval(c, {0.25, 0.25}) == 300.0);
  CHECK(eval(c, {0.75, 0.75}) == 300.0);
  CHECK(eval(c, {0.25, 0.75}) == doctest::Approx(1.0 / 300.0));
  CHECK(eval(c, {0.75, 0.25}) == doctest::Approx(1.0 / 300.0));
  const auto fig = make_cross(0.4, 0.6, 300.0);
  CHECK(fig.x == 0.4);
  CHECK(fig.y == 0.6);
}

TEST_CASE("two-valued field with ratio P^2") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto kind : {CoefficientKind::box, CoefficientKind::cross}) {
    UniformSource s(SourceKind::pseudo, 4);
    const auto coeff = sample_coefficient(kind, s, 1000.0);
    double lo = 1e300, hi = 0.0;
    for (int i = 0; i < 5000; ++i) {
      const double a = eval(coeff, {u(rng), u(rng)});
      CHECK((a == 1000.0 || a == doctest::Approx(1e-3)));
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    CHECK(lo * hi == doctest::Approx(1.0));
    CHECK(hi / lo == doctest::Approx(1e6));
  }
}

TEST_CASE("element values use the barycenter") {
  const auto mesh = structured_unit_square(10);
  const auto b = make_box(0.5, 0.5, 0.2, 300.0);
  const auto values = element_values(b, mesh);
  REQUIRE(values.size() == mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const Point c = mesh.barycenter(static_cast<int>(t));
    CHECK(values[t] == eval(b, c));
    const bool fully_inside = c.x > 0.4 && c.x < 0.6 && c.y > 0.4 && c.y < 0.6;
    if (fully_inside) CHECK(values[t] == doctest::Approx(1.0 / 300.0));
    if (c.x < 0.3 || c.x > 0.7) CHECK(values[t] == 300.0);
  }
}

TEST_CASE("kind names") {
  CHECK(coefficient_kind_from_string("box") == CoefficientKind::box);
  CHECK(coefficient_kind_from_string("cross") == CoefficientKind::cross);
  CHECK_THROWS_AS(coefficient_kind_from_string("disk"), DomainError);
}
