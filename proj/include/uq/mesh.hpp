#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace uq {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Edge {
  std::array<int, 2> vertices;
  /// Adjacent triangles; triangles[1] == -1 on the domain boundary.
  std::array<int, 2> triangles;
  bool is_boundary() const { return triangles[1] < 0; }
};

/// Conforming triangulation of the unit square.
///
/// Triangles are stored counter-clockwise with the newest vertex first, so the
/// refinement edge of triangle (v0, v1, v2) is (v1, v2). The edge table is
/// rebuilt on construction; a mesh is immutable afterwards.
class TriMesh {
 public:
  TriMesh() = default;
  TriMesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
          std::vector<int> parents = {});

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  std::span<const Point> vertices() const { return vertices_; }
  std::span<const std::array<int, 3>> triangles() const { return triangles_; }
  std::span<const Edge> edges() const { return edges_; }

  const Point& vertex(int v) const;
  const std::array<int, 3>& triangle(int t) const;
  const Edge& edge(int e) const;
  /// Edge ids of triangle t; entry i is the edge opposite local vertex i.
  const std::array<int, 3>& triangle_edges(int t) const;
  int refinement_edge(int t) const { return triangle_edges(t)[0]; }
  bool is_boundary_vertex(int v) const;

  /// Triangle id in the mesh this one was refined from (identity for fresh meshes).
  std::span<const int> parents() const { return parents_; }

  double area(int t) const;
  double signed_area(int t) const;
  double diameter(int t) const;
  double edge_length(int e) const;
  Point barycenter(int t) const;
  double min_angle(int t) const;
  /// Edges of t not on the domain boundary.
  std::vector<int> interior_edges(int t) const;

  /// Empty string when the mesh is a valid conforming triangulation of
  /// [0,1]^2; otherwise the first violation found.
  std::string validate() const;

 private:
  void check_id(int id, std::size_t size, const char* what) const;
  void build_edges();

  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<char> boundary_vertex_;
  std::vector<int> parents_;
};

using MeshPtr = std::shared_ptr<const TriMesh>;

/// (n+1)^2 vertex grid of [0,1]^2, each cell split along its (i,j)-(i+1,j+1) diagonal.
TriMesh structured_unit_square(int n);

/// Structured mesh with per-dimension resolution round(base_n * 1.5^level).
TriMesh uniform_family(int level, int base_n);
int uniform_family_resolution(int level, int base_n);

/// Newest-vertex bisection of the marked triangles plus the closure needed
/// for conformity. parents() of the result maps into `mesh`.
TriMesh bisect_refine(const TriMesh& mesh, std::span<const int> marked);

/// Tensor grid whose gridlines contain every break coordinate and at least
/// n subdivisions per direction. Uniform gridlines closer than a quarter cell
/// to a break are dropped.
TriMesh aligned_structured_mesh(std::span<const double> breaks_x,
                                std::span<const double> breaks_y, int n);

/// {"vertices": [[x,y],...], "triangles": [[a,b,c],...]}
std::string mesh_to_json(const TriMesh& mesh);

}  // namespace uq
