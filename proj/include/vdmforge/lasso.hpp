#pragma once

#include <set>
#include <vector>

#include "vdmforge/mesh.hpp"

namespace vdmforge {

// Occupancy grid of surface voxels. Cell size is max bbox extent/(resolution-2)
// so the longest axis keeps a one-voxel margin on each side; axes thinner than
// one cell are centered inside a single cell layer. A voxel is occupied when
// its closed cube intersects any triangle (separating-axis test), so exact
// face touches occupy both neighbors.
struct VoxelGrid {
  int resolution = 0;
  Vec3 origin;
  double voxel_size = 0.0;
  std::set<Coord3> occupancy;

  bool occupied(const Coord3& c) const { return occupancy.count(c) > 0; }
  Coord3 voxel_of(const Vec3& p) const;
  Vec3 voxel_center(const Coord3& c) const;
};

// Ordered closed loop of occupied voxels; consecutive entries (and
// last->first) are 26-neighbors, no repeats.
struct VoxelLoop {
  std::vector<Coord3> voxels;

  int size() const { return static_cast<int>(voxels.size()); }
  bool contains(const Coord3& c) const;
};

VoxelGrid voxelize_surface(const TriMesh& mesh, int resolution);

// Concatenated Dijkstra shortest paths (26-connectivity, step weights
// 1, sqrt2, sqrt3) between consecutive keypoints, closed back to the first.
// Junction duplicates are merged. Requires >= 3 occupied keypoints.
VoxelLoop dense_loop(const VoxelGrid& grid, const std::vector<Coord3>& keypoints);

// Shortest-path cost between two occupied voxels; used by dense_loop and
// exposed for the path-length acceptance checks.
double voxel_path_cost(const VoxelGrid& grid, const Coord3& from, const Coord3& to);

// Connected component of (occupancy minus loop) containing seed, with the
// loop voxels added back. Errors when the seed is on the loop or the flood
// escapes past 80% of all surface voxels (loop does not separate).
std::set<Coord3> flood_select(const VoxelGrid& grid, const VoxelLoop& loop,
                              const Coord3& seed);

// Submesh of triangles whose centroids fall inside region voxels, vertices
// reindexed compactly.
TriMesh extract_part(const TriMesh& mesh, const std::set<Coord3>& region,
                     const VoxelGrid& grid);

// Conservative closed triangle/axis-aligned-box intersection test.
bool triangle_box_overlap(const Vec3& box_center, const Vec3& box_half, const Vec3& a,
                          const Vec3& b, const Vec3& c);

}  // namespace vdmforge
