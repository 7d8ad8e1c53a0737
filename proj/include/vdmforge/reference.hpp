#pragma once

#include <vector>

#include "vdmforge/field.hpp"
#include "vdmforge/flatten.hpp"
#include "vdmforge/lasso.hpp"
#include "vdmforge/mesh.hpp"
#include "vdmforge/render.hpp"

// Serial reference implementations. They are deliberately written as
// straight-line versions of the definitions, independent of the accelerated
// production paths, and serve as test oracles and benchmark baselines.
namespace vdmforge::reference {

// Signed solid angle of triangle (a,b,c) at q by spherical excess
// (l'Huilier), an algebraic route independent of the production atan2 form.
double solid_angle_spherical_excess(const Vec3& a, const Vec3& b, const Vec3& c,
                                    const Vec3& q);

// Adaptive-subdivision quadrature of the solid-angle integrand
// (r_hat . n) / r^2 over the triangle, refined until the requested absolute
// tolerance is met.
double solid_angle_quadrature(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& q,
                              double tol);

// Winding number via the spherical-excess route, serial sum.
double winding_number_excess(const TriMesh& mesh, const Vec3& q);

// First-minimum linear-scan nearest neighbor.
struct Nearest {
  int index = -1;
  double sq_dist = 0.0;
};
Nearest nearest_bruteforce(const std::vector<Vec3>& points, const Vec3& q);

// O(n*m) symmetric squared chamfer with first-minimum pairings.
struct BruteChamfer {
  double loss = 0.0;
  std::vector<int> nearest_in_q, nearest_in_p;
};
BruteChamfer chamfer_bruteforce(const std::vector<Vec3>& P, const std::vector<Vec3>& Q);

// Straight-line per-point evaluation of the deformation-field architecture,
// reading the packed parameter vector directly.
std::vector<Vec3> mlp_forward_reference(const MlpField<double>& field,
                                        const std::vector<Vec2>& inputs);

// Dense least-squares minimizer of the edge-preservation energy with the
// boundary pinned (Eigen LDLT on the full normal equations).
TriMesh deform_dense_reference(const PartPatch& patch, const std::vector<Vec3>& Bprime);

// Plane normal from a full SVD of the centered point matrix.
Vec3 plane_normal_svd(const std::vector<Vec3>& points);

// All-triangles orthographic renderers, same pixel and encoding conventions
// as the production BVH renderer.
ImageRgb render_normals_bruteforce(const TriMesh& mesh, const CameraPose& pose);

// Bellman-Ford shortest-path cost over the occupied voxels (26-connectivity,
// 1 / sqrt2 / sqrt3 step weights).
double voxel_path_cost_bellman_ford(const VoxelGrid& grid, const Coord3& from,
                                    const Coord3& to);

// Serial n^3-style matrix product used as the GEMM baseline.
void gemm_naive(const float* A, const float* B, float* C, int m, int k, int n);

}  // namespace vdmforge::reference
