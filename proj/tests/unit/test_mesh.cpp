#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <set>

#include "uq/coefficient.hpp"
#include "uq/error.hpp"
#include "uq/mesh.hpp"

using namespace uq;

namespace {

double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool inside(const TriMesh& m, int t, Point p) {
  const auto& tri = m.triangle(t);
  const Point a = m.vertex(tri[0]), b = m.vertex(tri[1]), c = m.vertex(tri[2]);
  const double tol = -1e-14;
  return cross(a, b, p) >= tol && cross(b, c, p) >= tol && cross(c, a, p) >= tol;
}

bool on_some_edge(const TriMesh& m, Point p, Point q) {
  // Segment pq is covered by mesh edges iff the edges lying on it sum to its length.
  double covered = 0.0;
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    const auto& ed = m.edge(static_cast<int>(e));
    const Point a = m.vertex(ed.vertices[0]), b = m.vertex(ed.vertices[1]);
    if (std::abs(cross(p, q, a)) > 1e-12 || std::abs(cross(p, q, b)) > 1e-12) continue;
    auto param = [&](Point x) {
      const double dx = q.x - p.x, dy = q.y - p.y;
      return ((x.x - p.x) * dx + (x.y - p.y) * dy) / (dx * dx + dy * dy);
    };
    const double lo = std::max(0.0, std::min(param(a), param(b)));
    const double hi = std::min(1.0, std::max(param(a), param(b)));
    if (hi > lo) covered += hi - lo;
  }
  return std::abs(covered - 1.0) < 1e-9;
}

double min_angle_of(const TriMesh& m) {
  double out = 10.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) out = std::min(out, m.min_angle(static_cast<int>(t)));
  return out;
}

}  // namespace

TEST_CASE("structured meshes") {
  const auto m1 = structured_unit_square(1);
  CHECK(m1.num_vertices() == 4);
  CHECK(m1.num_triangles() == 2);
  CHECK(structured_unit_square(10).num_vertices() == 121);
  CHECK(structured_unit_square(14).num_vertices() == 225);
  CHECK(structured_unit_square(15).num_vertices() == 256);
  for (int n : {1, 3, 10}) CHECK(structured_unit_square(n).validate().empty());
}

TEST_CASE("uniform family grows by about 2.25 per level") {
  CHECK(uniform_family(0, 15).num_vertices() == 256);
  CHECK(uniform_family_resolution(1, 15) == 23);
  CHECK(uniform_family(1, 15).num_vertices() == 576);
  for (int l = 0; l < 6; ++l) {
    const double ratio = static_cast<double>(uniform_family(l + 1, 15).num_vertices()) /
                         static_cast<double>(uniform_family(l, 15).num_vertices());
    CHECK(ratio >= 2.0);
    CHECK(ratio <= 2.5);
  }
  CHECK_THROWS_AS(uniform_family(-1, 15), DomainError);
}

TEST_CASE("geometry queries") {
  const TriMesh m({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {{{0, 1, 2}}, {{3, 2, 1}}});
  CHECK(m.validate().empty());
  CHECK(m.diameter(0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(m.area(0) == doctest::Approx(0.5));
  const Point c = m.barycenter(0);
  CHECK(c.x == doctest::Approx(1.0 / 3.0));
  CHECK(c.y == doctest::Approx(1.0 / 3.0));
  bool found = false;
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    const auto& ed = m.edge(static_cast<int>(e));
    std::set<int> vs(ed.vertices.begin(), ed.vertices.end());
    if (vs == std::set<int>{0, 1}) {
      CHECK(m.edge_length(static_cast<int>(e)) == doctest::Approx(1.0));
      CHECK(ed.is_boundary());
      found = true;
    }
  }
  CHECK(found);
  for (int t : {0, 1}) {
    const auto interior = m.interior_edges(t);
    REQUIRE(interior.size() == 1);
    const auto& ed = m.edge(interior[0]);
    CHECK(std::set<int>(ed.vertices.begin(), ed.vertices.end()) == std::set<int>{1, 2});
  }
  CHECK_THROWS(m.area(2));
  CHECK_THROWS(m.vertex(-1));
}

TEST_CASE("edge table consistency") {
  const auto m = structured_unit_square(4);
  std::size_t boundary = 0;
  for (const auto& e : m.edges()) {
    if (e.is_boundary()) {
      ++boundary;
    } else {
      CHECK(e.triangles[0] >= 0);
      CHECK(e.triangles[0] != e.triangles[1]);
    }
  }
  CHECK(boundary == 16);
  // Euler: V - E + F = 1 for a disc.
  CHECK(static_cast<long>(m.num_vertices()) - static_cast<long>(m.num_edges()) +
            static_cast<long>(m.num_triangles()) == 1);
}

TEST_CASE("bisection with empty marking returns the same mesh") {
  const auto m = structured_unit_square(3);
  const auto r = bisect_refine(m, {});
  CHECK(r.num_vertices() == m.num_vertices());
  CHECK(r.num_triangles() == m.num_triangles());
  for (std::size_t t = 0; t < m.num_triangles(); ++t) CHECK(r.triangle(static_cast<int>(t)) == m.triangle(static_cast<int>(t)));
}

TEST_CASE("bisection of one triangle on the two-triangle square") {
  const auto m = structured_unit_square(1);
  const int marked[] = {0};
  const auto r = bisect_refine(m, marked);
  CHECK(r.validate().empty());
  CHECK(r.num_triangles() >= 4);
  CHECK(r.num_vertices() > m.num_vertices());
}

TEST_CASE("random refinement keeps conformity, nesting and shape") {
  std::mt19937 rng(12345);
  auto mesh = std::make_shared<const TriMesh>(structured_unit_square(3));
  const double initial_angle = min_angle_of(*mesh);
  for (int step = 0; step < 12; ++step) {
    std::vector<int> marked;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(mesh->num_triangles()) - 1);
    for (int i = 0; i < 1 + step; ++i) marked.push_back(pick(rng));
    auto next = std::make_shared<const TriMesh>(bisect_refine(*mesh, marked));
    REQUIRE(next->validate().empty());
    CHECK(next->num_vertices() > mesh->num_vertices());
    for (std::size_t v = 0; v < mesh->num_vertices(); ++v) {
      CHECK(next->vertex(static_cast<int>(v)).x == mesh->vertex(static_cast<int>(v)).x);
      CHECK(next->vertex(static_cast<int>(v)).y == mesh->vertex(static_cast<int>(v)).y);
    }
    double area = 0.0;
    for (std::size_t t = 0; t < next->num_triangles(); ++t) {
      const int ti = static_cast<int>(t);
      CHECK(next->signed_area(ti) > 0.0);
      CHECK(inside(*mesh, next->parents()[t], next->barycenter(ti)));
      for (int v : next->triangle(ti)) CHECK(inside(*mesh, next->parents()[t], next->vertex(v)));
      area += next->area(ti);
    }
    CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
    // Newest-vertex bisection of a right isosceles start creates only similar shapes.
    CHECK(min_angle_of(*next) >= 0.5 * initial_angle);
    for (int t : marked) {
      int children = 0;
      for (int p : next->parents()) children += p == t;
      CHECK(children >= 2);
    }
    mesh = next;
  }
}

TEST_CASE("aligned meshes contain the coefficient jumps") {
  SUBCASE("breaks at 0.5") {
    const double b[] = {0.5};
    const auto m = aligned_structured_mesh(b, b, 2);
    CHECK(m.validate().empty());
    const auto coeff = make_cross(0.5, 0.5, 300.0);
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      const auto& tri = m.triangle(static_cast<int>(t));
      const double a = element_value(coeff, m, static_cast<int>(t));
      for (int v : tri) {
        // Shrink each vertex towards the barycenter and compare.
        const Point c = m.barycenter(static_cast<int>(t));
        const Point p = m.vertex(v);
        CHECK(eval(coeff, {0.9 * p.x + 0.1 * c.x, 0.9 * p.y + 0.1 * c.y}) == a);
      }
    }
  }
  SUBCASE("box sample corners lie on edges") {
    const auto coeff = make_box(0.4, 0.6, 0.3, 300.0);
    const auto bx = coeff.breaks_x(), by = coeff.breaks_y();
    CHECK(bx[0] == doctest::Approx(0.25));
    CHECK(bx[1] == doctest::Approx(0.55));
    CHECK(by[0] == doctest::Approx(0.45));
    CHECK(by[1] == doctest::Approx(0.75));
    const auto m = aligned_structured_mesh(bx, by, 7);
    CHECK(m.validate().empty());
    for (double x : bx) CHECK(on_some_edge(m, {x, by[0]}, {x, by[1]}));
    for (double y : by) CHECK(on_some_edge(m, {bx[0], y}, {bx[1], y}));
  }
  SUBCASE("no breaks gives the structured mesh") {
    const auto m = aligned_structured_mesh({}, {}, 5);
    CHECK(m.num_vertices() == structured_unit_square(5).num_vertices());
    CHECK(m.num_triangles() == structured_unit_square(5).num_triangles());
  }
  SUBCASE("at least n subdivisions") {
    const double b[] = {0.26, 0.74};
    for (int n : {3, 10, 40}) {
      const auto m = aligned_structured_mesh(b, b, n);
      CHECK(m.num_vertices() >= static_cast<std::size_t>((n + 1) * (n + 1)));
    }
  }
}

TEST_CASE("mesh json dump") {
  const auto j = mesh_to_json(structured_unit_square(1));
  CHECK(j.find("\"vertices\"") != std::string::npos);
  CHECK(j.find("\"triangles\"") != std::string::npos);
}
