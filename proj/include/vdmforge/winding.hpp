#pragma once

#include <memory>
#include <vector>

#include "vdmforge/mesh.hpp"

namespace vdmforge {

// Octree over triangles with per-node area-weighted dipole moments, used to
// approximate far-field solid-angle contributions.
//
// Admissibility: a node of area A, centroid radius r (max distance from the
// area centroid to any vertex of its triangles) may be replaced by its dipole
// at distance d = |q - centroid| when d > 2r and its conservative error bound
//   E = (3 / 4pi) * A * 2r / (d - r)^3
// stays within the node's share eps * A / A_total of the total budget
// (eps = 1e-5, an order under the guaranteed 1e-4 absolute error).
class WindingTree {
 public:
  explicit WindingTree(const TriMesh& mesh);
  ~WindingTree();
  WindingTree(WindingTree&&) noexcept;
  WindingTree& operator=(WindingTree&&) noexcept;

  double evaluate(const Vec3& q) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Generalized winding number at q: (1/4pi) * sum of signed solid angles of
// all triangles (van Oosterom–Strackee form), evaluated exactly in triangle
// index order. Throws DataError when q lies on a triangle (distance <= 1e-9),
// reporting the triangle id; callers perturb such queries.
double winding_number_exact(const TriMesh& mesh, const Vec3& q);

// Tree-accelerated evaluation, absolute error < 1e-4 versus the exact sum.
// Same on-surface refusal as the exact form.
double winding_number(const WindingTree& tree, const TriMesh& mesh, const Vec3& q);
double winding_number(const TriMesh& mesh, const Vec3& q);

// Keeps exactly the points with |winding number| < threshold, in order.
// Threshold must lie in (0,1). Uses the accelerated evaluator.
OrientedPointSet filter_interior(const OrientedPointSet& points, const TriMesh& mesh,
                                 double threshold = 0.5);

}  // namespace vdmforge
