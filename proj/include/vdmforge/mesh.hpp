#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vdmforge/vec.hpp"

namespace vdmforge {

// Indexed triangle mesh with optional per-vertex UVs and normals.
// Immutable by convention once built: operations return new meshes.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec2> uvs;      // empty or |vertices|
  std::vector<Vec3> normals;  // empty or |vertices|, unit length

  bool has_uvs() const { return !uvs.empty(); }
  bool has_normals() const { return !normals.empty(); }
  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
};

// Throws DataError if indices are out of range, a triangle repeats a vertex,
// attribute arrays mismatch, or stored normals are not unit length.
void validate_mesh(const TriMesh& mesh);

Vec3 triangle_normal(const TriMesh& mesh, int t);
double triangle_area(const TriMesh& mesh, int t);
Vec3 triangle_centroid(const TriMesh& mesh, int t);
double total_area(const TriMesh& mesh);

// Ordered cyclic run of vertices along one boundary component.
// Consecutive entries (including last->first) share an edge that has exactly
// one incident triangle.
struct BoundaryLoop {
  std::vector<int> vertex_indices;

  int size() const { return static_cast<int>(vertex_indices.size()); }
};

// One loop per boundary component, each simple and closed. Loops are ordered
// by their smallest vertex index; each loop starts at its smallest vertex.
// Throws DataError on a non-manifold edge (reports the edge).
std::vector<BoundaryLoop> boundary_loops(const TriMesh& mesh);

// Point cloud with unit normals, used for surface samples.
struct OrientedPointSet {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  int size() const { return static_cast<int>(points.size()); }
};

// Per-vertex neighbor lists from triangle edges, each list sorted ascending.
std::vector<std::vector<int>> vertex_adjacency(const TriMesh& mesh);

// Vertices within `rings` edge hops of any loop vertex (rings=0 gives the
// loop itself).
std::vector<int> select_near_boundary(const TriMesh& mesh, const BoundaryLoop& loop,
                                      int rings);

// Same expansion from an arbitrary seed vertex set.
std::vector<int> select_near_vertices(const TriMesh& mesh, const std::vector<int>& seeds,
                                      int rings);

// Jacobi-style uniform-weight smoothing: each selected vertex moves toward
// the average of its neighbors (positions from the previous iteration) by
// factor lambda, `iterations` times. Unselected vertices are untouched;
// isolated selected vertices are left unchanged and counted in the returned
// warning total.
TriMesh laplacian_smooth(const TriMesh& mesh, const std::vector<int>& subset,
                         int iterations, double lambda, int* isolated_warnings = nullptr);

// V - E + F of the triangle mesh (counting undirected edges).
int euler_characteristic(const TriMesh& mesh);

}  // namespace vdmforge
