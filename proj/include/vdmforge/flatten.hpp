#pragma once

#include <vector>

#include "vdmforge/mesh.hpp"

namespace vdmforge {

// Plane {x : n.x = d} with a right-handed orthonormal in-plane frame (t, b, n).
struct Plane {
  Vec3 normal;
  double offset = 0.0;
  Vec3 tangent;
  Vec3 bitangent;

  double signed_distance(const Vec3& p) const { return dot(normal, p) - offset; }
  Vec3 project(const Vec3& p) const { return p - normal * signed_distance(p); }
  Vec2 to_plane(const Vec3& p) const;
  Vec3 from_plane(const Vec2& q) const;
};

// Part mesh with its single boundary loop B, interior vertex set A, and the
// full edge set E.
struct PartPatch {
  TriMesh mesh;
  BoundaryLoop boundary;
  std::vector<int> interior;                 // sorted
  std::vector<std::pair<int, int>> edges;    // undirected, first < second
};

// Builds a PartPatch; requires exactly one boundary loop.
PartPatch analyze_part(const TriMesh& mesh);

// Least-squares plane through the points (normal = smallest-eigenvalue
// direction of the covariance). If `orient_toward` is given, the normal sign
// is chosen so that point lies on the +n side. Throws DataError when the
// points are collinear or coincident.
Plane fit_plane(const std::vector<Vec3>& points, const Vec3* orient_toward = nullptr);

// B'[i] = B[i] - (n.B[i] - d) n, in loop order.
std::vector<Vec3> project_boundary(const PartPatch& patch, const Plane& plane);

// Minimizes the change of edge-difference vectors with the boundary pinned to
// Bprime: three independent graph-Laplacian solves (unit weights), conjugate
// gradient with Jacobi preconditioner at 1e-10 relative tolerance. An interior
// component with no path to the boundary makes the system singular and is
// reported as an error.
TriMesh deform_to_boundary(const PartPatch& patch, const std::vector<Vec3>& Bprime);

struct StitchResult {
  TriMesh mesh;
  std::vector<int> seam_vertices;  // output indices of the part boundary ring
  int part_vertex_base = 0;        // part vertices occupy [base, vertex_count)
};

// Places the flattened part in a unit-square grid tile on its own plane:
// grid faces whose centroids fall inside the part's boundary polygon are
// removed and the resulting hole loop is zippered to the part boundary by
// greedy shortest-diagonal advancement. The output has exactly one boundary
// loop (the tile's outer edge).
StitchResult stitch_to_square(const TriMesh& part, int tile_resolution, double margin);

// Similarity transform about the part's in-plane centroid: uniform scale,
// rotation about the plane normal, then an in-plane translation. Identity
// parameters return the input bitwise. Errors when the transformed footprint
// leaves the unit tile around the original centroid.
TriMesh augment(const TriMesh& part, const Vec2& translation, double scale,
                double rotation);

// Deformation energy: sum over edges of |(p'-q') - (p-q)|^2.
double edge_preservation_energy(const PartPatch& patch, const std::vector<Vec3>& deformed);

}  // namespace vdmforge
