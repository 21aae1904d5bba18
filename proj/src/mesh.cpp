#include "uq/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "uq/error.hpp"

namespace uq {

TriMesh::TriMesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
                 std::vector<int> parents)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), parents_(std::move(parents)) {
  const int nv = static_cast<int>(vertices_.size());
  for (const auto& tri : triangles_)
    for (int v : tri)
      if (v < 0 || v >= nv) throw std::invalid_argument("TriMesh: vertex index out of range");
  if (parents_.empty()) {
    parents_.resize(triangles_.size());
    for (std::size_t t = 0; t < parents_.size(); ++t) parents_[t] = static_cast<int>(t);
  } else if (parents_.size() != triangles_.size()) {
    throw std::invalid_argument("TriMesh: parent map size mismatch");
  }
  build_edges();
}

void TriMesh::build_edges() {
  const auto nv = static_cast<std::uint64_t>(vertices_.size());
  struct HalfEdge {
    std::uint64_t key;
    int slot;  // 3 * triangle + local vertex opposite the edge
  };
  std::vector<HalfEdge> half;
  half.reserve(3 * triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (int i = 0; i < 3; ++i) {
      const auto a = static_cast<std::uint64_t>(tri[(i + 1) % 3]);
      const auto b = static_cast<std::uint64_t>(tri[(i + 2) % 3]);
      half.push_back({std::min(a, b) * nv + std::max(a, b), static_cast<int>(3 * t + i)});
    }
  }
  std::sort(half.begin(), half.end(), [](const HalfEdge& l, const HalfEdge& r) {
    return l.key != r.key ? l.key < r.key : l.slot < r.slot;
  });

  edges_.clear();
  triangle_edges_.assign(triangles_.size(), {-1, -1, -1});
  boundary_vertex_.assign(vertices_.size(), 0);
  for (std::size_t i = 0; i < half.size();) {
    std::size_t j = i;
    while (j < half.size() && half[j].key == half[i].key) ++j;
    if (j - i > 2) throw std::invalid_argument("TriMesh: edge shared by more than two triangles");
    Edge e;
    e.vertices = {static_cast<int>(half[i].key / nv), static_cast<int>(half[i].key % nv)};
    e.triangles = {half[i].slot / 3, j - i == 2 ? half[i + 1].slot / 3 : -1};
    const int id = static_cast<int>(edges_.size());
    for (std::size_t k = i; k < j; ++k) triangle_edges_[half[k].slot / 3][half[k].slot % 3] = id;
    if (e.is_boundary()) {
      boundary_vertex_[e.vertices[0]] = 1;
      boundary_vertex_[e.vertices[1]] = 1;
    }
    edges_.push_back(e);
    i = j;
  }
}

void TriMesh::check_id(int id, std::size_t size, const char* what) const {
  if (id < 0 || static_cast<std::size_t>(id) >= size)
    throw std::out_of_range(std::string("TriMesh: invalid ") + what + " id " + std::to_string(id));
}

const Point& TriMesh::vertex(int v) const {
  check_id(v, vertices_.size(), "vertex");
  return vertices_[v];
}

const std::array<int, 3>& TriMesh::triangle(int t) const {
  check_id(t, triangles_.size(), "triangle");
  return triangles_[t];
}

const Edge& TriMesh::edge(int e) const {
  check_id(e, edges_.size(), "edge");
  return edges_[e];
}

const std::array<int, 3>& TriMesh::triangle_edges(int t) const {
  check_id(t, triangles_.size(), "triangle");
  return triangle_edges_[t];
}

bool TriMesh::is_boundary_vertex(int v) const {
  check_id(v, vertices_.size(), "vertex");
  return boundary_vertex_[v] != 0;
}

double TriMesh::signed_area(int t) const {
  const auto& tri = triangle(t);
  const Point& a = vertices_[tri[0]];
  const Point& b = vertices_[tri[1]];
  const Point& c = vertices_[tri[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double TriMesh::area(int t) const { return std::abs(signed_area(t)); }

double TriMesh::diameter(int t) const {
  const auto& te = triangle_edges(t);
  return std::max({edge_length(te[0]), edge_length(te[1]), edge_length(te[2])});
}

double TriMesh::edge_length(int e) const {
  const auto& ed = edge(e);
  const Point& a = vertices_[ed.vertices[0]];
  const Point& b = vertices_[ed.vertices[1]];
  return std::hypot(b.x - a.x, b.y - a.y);
}

Point TriMesh::barycenter(int t) const {
  const auto& tri = triangle(t);
  Point p;
  for (int v : tri) {
    p.x += vertices_[v].x;
    p.y += vertices_[v].y;
  }
  return {p.x / 3.0, p.y / 3.0};
}

double TriMesh::min_angle(int t) const {
  const auto& te = triangle_edges(t);
  const double a = edge_length(te[0]), b = edge_length(te[1]), c = edge_length(te[2]);
  auto angle = [](double opp, double s1, double s2) {
    return std::acos(std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2 * s1 * s2), -1.0, 1.0));
  };
  return std::min({angle(a, b, c), angle(b, a, c), angle(c, a, b)});
}

std::vector<int> TriMesh::interior_edges(int t) const {
  std::vector<int> out;
  for (int e : triangle_edges(t))
    if (!edges_[e].is_boundary()) out.push_back(e);
  return out;
}

std::string TriMesh::validate() const {
  std::ostringstream msg;
  double total = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const double a = signed_area(static_cast<int>(t));
    if (!(a > 0.0)) {
      msg << "triangle " << t << " has nonpositive signed area " << a;
      return msg.str();
    }
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    msg << "triangle areas sum to " << total << " instead of 1";
    return msg.str();
  }
  auto on_square_boundary = [](const Point& p, const Point& q) {
    constexpr double tol = 1e-12;
    return (std::abs(p.x) < tol && std::abs(q.x) < tol) ||
           (std::abs(p.x - 1) < tol && std::abs(q.x - 1) < tol) ||
           (std::abs(p.y) < tol && std::abs(q.y) < tol) ||
           (std::abs(p.y - 1) < tol && std::abs(q.y - 1) < tol);
  };
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    const Point& p = vertices_[ed.vertices[0]];
    const Point& q = vertices_[ed.vertices[1]];
    if (ed.is_boundary()) {
      if (!on_square_boundary(p, q)) {
        msg << "edge " << e << " has one neighbour but is not on the domain boundary (hanging node)";
        return msg.str();
      }
      continue;
    }
    // Consistent orientation: the two triangles traverse the edge in opposite directions.
    auto direction = [&](int t) {
      const auto& tri = triangles_[t];
      for (int i = 0; i < 3; ++i)
        if (tri[i] == ed.vertices[0]) return tri[(i + 1) % 3] == ed.vertices[1] ? 1 : -1;
      return 0;
    };
    if (direction(ed.triangles[0]) * direction(ed.triangles[1]) != -1) {
      msg << "edge " << e << " is traversed inconsistently by its triangles";
      return msg.str();
    }
  }
  std::vector<char> used(vertices_.size(), 0);
  for (const auto& tri : triangles_)
    for (int v : tri) used[v] = 1;
  if (std::find(used.begin(), used.end(), 0) != used.end()) return "mesh has unused vertices";
  return {};
}

TriMesh structured_unit_square(int n) {
  if (n < 1) throw DomainError("structured_unit_square: n must be at least 1");
  return aligned_structured_mesh({}, {}, n);
}

int uniform_family_resolution(int level, int base_n) {
  if (level < 0) throw DomainError("uniform_family: level must be nonnegative");
  if (base_n < 1) throw DomainError("uniform_family: base resolution must be positive");
  return static_cast<int>(std::lround(base_n * std::pow(1.5, level)));
}

TriMesh uniform_family(int level, int base_n) {
  return structured_unit_square(uniform_family_resolution(level, base_n));
}

TriMesh bisect_refine(const TriMesh& mesh, std::span<const int> marked) {
  const auto nt = static_cast<int>(mesh.num_triangles());
  std::vector<char> edge_marked(mesh.num_edges(), 0);
  std::deque<int> queue;
  auto mark = [&](int e) {
    if (!edge_marked[e]) {
      edge_marked[e] = 1;
      queue.push_back(e);
    }
  };
  for (int t : marked) {
    if (t < 0 || t >= nt) throw std::out_of_range("bisect_refine: invalid triangle id");
    mark(mesh.refinement_edge(t));
  }
  // Closure: a triangle with any marked edge must bisect its refinement edge.
  while (!queue.empty()) {
    const Edge& e = mesh.edge(queue.front());
    queue.pop_front();
    for (int t : e.triangles)
      if (t >= 0) mark(mesh.refinement_edge(t));
  }

  std::vector<Point> vertices(mesh.vertices().begin(), mesh.vertices().end());
  std::vector<int> midpoint(mesh.num_edges(), -1);
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    if (!edge_marked[e]) continue;
    const Edge& ed = mesh.edge(static_cast<int>(e));
    const Point& a = vertices[ed.vertices[0]];
    const Point& b = vertices[ed.vertices[1]];
    midpoint[e] = static_cast<int>(vertices.size());
    vertices.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
  }

  std::vector<std::array<int, 3>> triangles;
  std::vector<int> parents;
  triangles.reserve(mesh.num_triangles() + 3 * queue.size());
  for (int t = 0; t < nt; ++t) {
    const auto [a, b, c] = mesh.triangle(t);
    const auto& te = mesh.triangle_edges(t);
    auto emit = [&](int p, int q, int r) {
      triangles.push_back({p, q, r});
      parents.push_back(t);
    };
    if (!edge_marked[te[0]]) {
      emit(a, b, c);
      continue;
    }
    const int m = midpoint[te[0]];
    // Children (m, a, b) and (m, c, a); their refinement edges are the
    // parent edges opposite c and b respectively.
    if (edge_marked[te[2]]) {
      const int m1 = midpoint[te[2]];
      emit(m1, m, a);
      emit(m1, b, m);
    } else {
      emit(m, a, b);
    }
    if (edge_marked[te[1]]) {
      const int m2 = midpoint[te[1]];
      emit(m2, m, c);
      emit(m2, a, m);
    } else {
      emit(m, c, a);
    }
  }
  return TriMesh(std::move(vertices), std::move(triangles), std::move(parents));
}

namespace {

std::vector<double> gridlines(std::span<const double> breaks, int n) {
  for (double b : breaks)
    if (!(b > 0.0 && b < 1.0)) throw DomainError("aligned_structured_mesh: breaks must lie in (0,1)");
  std::vector<double> lines;
  const double min_gap = 0.25 / n;
  for (int i = 0; i <= n; ++i) {
    const double x = static_cast<double>(i) / n;
    const bool interior = i > 0 && i < n;
    const bool near_break = std::any_of(breaks.begin(), breaks.end(),
                                        [&](double b) { return std::abs(b - x) < min_gap; });
    if (!interior || !near_break) lines.push_back(x);
  }
  lines.insert(lines.end(), breaks.begin(), breaks.end());
  std::sort(lines.begin(), lines.end());
  lines.erase(std::unique(lines.begin(), lines.end(),
                          [](double l, double r) { return std::abs(l - r) < 1e-14; }),
              lines.end());
  return lines;
}

}  // namespace

TriMesh aligned_structured_mesh(std::span<const double> breaks_x, std::span<const double> breaks_y,
                                int n) {
  if (n < 1) throw DomainError("aligned_structured_mesh: n must be at least 1");
  const std::vector<double> xs = gridlines(breaks_x, n);
  const std::vector<double> ys = gridlines(breaks_y, n);
  const int nx = static_cast<int>(xs.size());
  const int ny = static_cast<int>(ys.size());

  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) vertices.push_back({xs[i], ys[j]});

  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(2 * static_cast<std::size_t>(nx - 1) * (ny - 1));
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int v00 = j * nx + i, v10 = v00 + 1, v01 = v00 + nx, v11 = v01 + 1;
      // Right-angle corner is the newest vertex; the diagonal is the refinement edge.
      triangles.push_back({v10, v11, v00});
      triangles.push_back({v01, v00, v11});
    }
  }
  return TriMesh(std::move(vertices), std::move(triangles));
}

std::string mesh_to_json(const TriMesh& mesh) {
  nlohmann::json j;
  auto& vs = j["vertices"] = nlohmann::json::array();
  for (const Point& p : mesh.vertices()) vs.push_back({p.x, p.y});
  auto& ts = j["triangles"] = nlohmann::json::array();
  for (const auto& t : mesh.triangles()) ts.push_back({t[0], t[1], t[2]});
  return j.dump();
}

}  // namespace uq
