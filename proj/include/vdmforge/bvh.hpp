#pragma once

#include <limits>
#include <vector>

#include "vdmforge/mesh.hpp"

namespace vdmforge {

// Möller–Trumbore ray/triangle intersection. Returns true with the ray
// parameter t >= 0 on a hit. Both the BVH and the brute-force reference use
// this exact predicate, so their per-triangle t values are identical.
bool ray_triangle_intersect(const Vec3& origin, const Vec3& dir, const Vec3& a,
                            const Vec3& b, const Vec3& c, double* t);

double point_triangle_sq_dist(const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c);

struct RayHit {
  int triangle = -1;
  double t = std::numeric_limits<double>::max();

  bool valid() const { return triangle >= 0; }
};

// Median-split bounding-volume hierarchy over the mesh triangles. Raycast
// returns the (t, triangle index) lexicographic minimum over all hits —
// the same winner an index-ordered linear scan picks.
class TriBvh {
 public:
  explicit TriBvh(const TriMesh& mesh);

  RayHit raycast(const Vec3& origin, const Vec3& dir) const;

  struct Closest {
    int triangle = -1;
    double sq_dist = std::numeric_limits<double>::max();
  };
  Closest closest_point(const Vec3& q) const;

 private:
  struct Node {
    Vec3 box_min, box_max;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf triangle range
  };

  int build(int lo, int hi);
  void raycast_node(int node, const Vec3& origin, const Vec3& dir, const Vec3& inv_dir,
                    RayHit& best) const;
  void closest_node(int node, const Vec3& q, Closest& best) const;

  const TriMesh* mesh_;
  std::vector<int> order_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;
};

}  // namespace vdmforge
