#include "vdmforge/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <unordered_map>

#include "vdmforge/errors.hpp"

namespace vdmforge {

namespace {

bool axis_separates(double p0, double p1, double p2, double r) {
  double mn = std::min({p0, p1, p2});
  double mx = std::max({p0, p1, p2});
  return mn > r || mx < -r;
}

}  // namespace

// Akenine-Möller separating-axis test; closed boxes, so touching counts as
// overlap.
bool triangle_box_overlap(const Vec3& box_center, const Vec3& box_half, const Vec3& a,
                          const Vec3& b, const Vec3& c) {
  Vec3 v0 = a - box_center, v1 = b - box_center, v2 = c - box_center;
  Vec3 e0 = v1 - v0, e1 = v2 - v1, e2 = v0 - v2;
  const Vec3& h = box_half;

  // 9 cross-product axes.
  const Vec3 edges[3] = {e0, e1, e2};
  for (const Vec3& e : edges) {
    {
      // axis = (1,0,0) x e = (0, -e.z, e.y)
      double p0 = -e.z * v0.y + e.y * v0.z;
      double p1 = -e.z * v1.y + e.y * v1.z;
      double p2 = -e.z * v2.y + e.y * v2.z;
      double r = h.y * std::abs(e.z) + h.z * std::abs(e.y);
      if (axis_separates(p0, p1, p2, r)) return false;
    }
    {
      // axis = (0,1,0) x e = (e.z, 0, -e.x)
      double p0 = e.z * v0.x - e.x * v0.z;
      double p1 = e.z * v1.x - e.x * v1.z;
      double p2 = e.z * v2.x - e.x * v2.z;
      double r = h.x * std::abs(e.z) + h.z * std::abs(e.x);
      if (axis_separates(p0, p1, p2, r)) return false;
    }
    {
      // axis = (0,0,1) x e = (-e.y, e.x, 0)
      double p0 = -e.y * v0.x + e.x * v0.y;
      double p1 = -e.y * v1.x + e.x * v1.y;
      double p2 = -e.y * v2.x + e.x * v2.y;
      double r = h.x * std::abs(e.y) + h.y * std::abs(e.x);
      if (axis_separates(p0, p1, p2, r)) return false;
    }
  }
  // Box face axes.
  for (int axis = 0; axis < 3; ++axis) {
    double mn = std::min({v0[axis], v1[axis], v2[axis]});
    double mx = std::max({v0[axis], v1[axis], v2[axis]});
    if (mn > h[axis] || mx < -h[axis]) return false;
  }
  // Triangle plane.
  Vec3 n = cross(e0, e1);
  double d = dot(n, v0);
  double r = h.x * std::abs(n.x) + h.y * std::abs(n.y) + h.z * std::abs(n.z);
  return std::abs(d) <= r;
}

Coord3 VoxelGrid::voxel_of(const Vec3& p) const {
  return {static_cast<int>(std::floor((p.x - origin.x) / voxel_size)),
          static_cast<int>(std::floor((p.y - origin.y) / voxel_size)),
          static_cast<int>(std::floor((p.z - origin.z) / voxel_size))};
}

Vec3 VoxelGrid::voxel_center(const Coord3& c) const {
  return {origin.x + (c.x + 0.5) * voxel_size, origin.y + (c.y + 0.5) * voxel_size,
          origin.z + (c.z + 0.5) * voxel_size};
}

bool VoxelLoop::contains(const Coord3& c) const {
  return std::find(voxels.begin(), voxels.end(), c) != voxels.end();
}

VoxelGrid voxelize_surface(const TriMesh& mesh, int resolution) {
  if (resolution < 8 || resolution > 1024)
    throw DataError("resolution must be in [8, 1024]");
  if (mesh.vertices.empty() || mesh.triangles.empty()) throw DataError("empty mesh");

  Vec3 mn = mesh.vertices[0], mx = mesh.vertices[0];
  for (const auto& v : mesh.vertices) {
    for (int a = 0; a < 3; ++a) {
      mn[a] = std::min(mn[a], v[a]);
      mx[a] = std::max(mx[a], v[a]);
    }
  }
  Vec3 extent = mx - mn;
  double max_extent = std::max({extent.x, extent.y, extent.z});
  if (max_extent <= 0.0) throw DataError("degenerate point-like mesh cannot be voxelized");

  VoxelGrid grid;
  grid.resolution = resolution;
  grid.voxel_size = max_extent / (resolution - 2);
  for (int a = 0; a < 3; ++a) {
    if (extent[a] >= grid.voxel_size)
      grid.origin[a] = mn[a] - grid.voxel_size;
    else
      grid.origin[a] = mn[a] + extent[a] * 0.5 - 1.5 * grid.voxel_size;
  }

  const double s = grid.voxel_size;
  const Vec3 half{s * 0.5, s * 0.5, s * 0.5};
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    int lo[3], hi[3];
    for (int ax = 0; ax < 3; ++ax) {
      double tmin = std::min({a[ax], b[ax], c[ax]});
      double tmax = std::max({a[ax], b[ax], c[ax]});
      lo[ax] = std::max(static_cast<int>(std::floor((tmin - grid.origin[ax]) / s)) - 1, 0);
      hi[ax] = std::min(static_cast<int>(std::floor((tmax - grid.origin[ax]) / s)) + 1,
                        resolution - 1);
    }
    for (int x = lo[0]; x <= hi[0]; ++x)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int z = lo[2]; z <= hi[2]; ++z) {
          Coord3 cell{x, y, z};
          if (grid.occupancy.count(cell)) continue;
          if (triangle_box_overlap(grid.voxel_center(cell), half, a, b, c))
            grid.occupancy.insert(cell);
        }
  }
  return grid;
}

namespace {

struct VoxelIndex {
  std::vector<Coord3> coords;
  std::unordered_map<Coord3, int, Coord3Hash> ids;

  explicit VoxelIndex(const VoxelGrid& grid) {
    coords.assign(grid.occupancy.begin(), grid.occupancy.end());
    for (size_t i = 0; i < coords.size(); ++i) ids[coords[i]] = static_cast<int>(i);
  }
};

const double kStepCost[4] = {0.0, 1.0, std::sqrt(2.0), std::sqrt(3.0)};

// Dijkstra from `from`; returns (dist, parent) arrays over the voxel index.
void dijkstra(const VoxelIndex& vi, int from, std::vector<double>& dist,
              std::vector<int>& parent) {
  const int n = static_cast<int>(vi.coords.size());
  dist.assign(n, std::numeric_limits<double>::infinity());
  parent.assign(n, -1);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
  dist[from] = 0.0;
  pq.push({0.0, from});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    const Coord3& c = vi.coords[u];
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          auto it = vi.ids.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == vi.ids.end()) continue;
          int v = it->second;
          double w = kStepCost[std::abs(dx) + std::abs(dy) + std::abs(dz)];
          if (dist[u] + w < dist[v]) {
            dist[v] = dist[u] + w;
            parent[v] = u;
            pq.push({dist[v], v});
          }
        }
  }
}

}  // namespace

double voxel_path_cost(const VoxelGrid& grid, const Coord3& from, const Coord3& to) {
  VoxelIndex vi(grid);
  auto fit = vi.ids.find(from), tit = vi.ids.find(to);
  if (fit == vi.ids.end() || tit == vi.ids.end())
    throw DataError("path endpoint is not an occupied voxel");
  std::vector<double> dist;
  std::vector<int> parent;
  dijkstra(vi, fit->second, dist, parent);
  return dist[tit->second];
}

VoxelLoop dense_loop(const VoxelGrid& grid, const std::vector<Coord3>& keypoints) {
  if (keypoints.size() < 3) throw DataError("dense_loop needs at least 3 keypoints");
  VoxelIndex vi(grid);
  std::vector<int> kp_ids;
  for (const auto& kp : keypoints) {
    auto it = vi.ids.find(kp);
    if (it == vi.ids.end())
      throw DataError("keypoint (" + std::to_string(kp.x) + "," + std::to_string(kp.y) +
                      "," + std::to_string(kp.z) + ") is not an occupied voxel");
    kp_ids.push_back(it->second);
  }

  VoxelLoop loop;
  const size_t nk = keypoints.size();
  for (size_t k = 0; k < nk; ++k) {
    int from = kp_ids[k], to = kp_ids[(k + 1) % nk];
    std::vector<double> dist;
    std::vector<int> parent;
    dijkstra(vi, from, dist, parent);
    if (!std::isfinite(dist[to]))
      throw DataError("no voxel path between keypoints " + std::to_string(k) + " and " +
                      std::to_string((k + 1) % nk));
    std::vector<int> segment;
    for (int v = to; v != -1; v = parent[v]) segment.push_back(v);
    std::reverse(segment.begin(), segment.end());
    // Merge the junction: every segment starts where the previous one ended.
    size_t start = k == 0 ? 0 : 1;
    size_t stop = segment.size() - (k + 1 == nk ? 1 : 0);  // last segment ends at start
    for (size_t i = start; i < stop; ++i) loop.voxels.push_back(vi.coords[segment[i]]);
  }

  std::set<Coord3> seen;
  for (const auto& v : loop.voxels)
    if (!seen.insert(v).second)
      throw DataError("dense loop self-intersects away from keypoint junctions");
  return loop;
}

std::set<Coord3> flood_select(const VoxelGrid& grid, const VoxelLoop& loop,
                              const Coord3& seed) {
  if (!grid.occupied(seed)) throw DataError("flood seed is not an occupied voxel");
  std::set<Coord3> loop_set(loop.voxels.begin(), loop.voxels.end());
  if (loop_set.count(seed)) throw DataError("flood seed lies on the loop");

  std::set<Coord3> region;
  std::queue<Coord3> frontier;
  region.insert(seed);
  frontier.push(seed);
  const size_t limit = static_cast<size_t>(0.8 * static_cast<double>(grid.occupancy.size()));
  while (!frontier.empty()) {
    Coord3 c = frontier.front();
    frontier.pop();
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          Coord3 n{c.x + dx, c.y + dy, c.z + dz};
          if (!grid.occupied(n) || loop_set.count(n) || region.count(n)) continue;
          region.insert(n);
          if (region.size() > limit)
            throw DataError("loop does not separate the surface (flood reached >80% of voxels)");
          frontier.push(n);
        }
  }
  region.insert(loop_set.begin(), loop_set.end());
  return region;
}

TriMesh extract_part(const TriMesh& mesh, const std::set<Coord3>& region,
                     const VoxelGrid& grid) {
  if (region.empty()) throw DataError("empty voxel region");
  TriMesh out;
  std::map<int, int> remap;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (!region.count(grid.voxel_of(triangle_centroid(mesh, t)))) continue;
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      int v = mesh.triangles[t][k];
      auto it = remap.find(v);
      if (it == remap.end()) {
        int idx = static_cast<int>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[v]);
        if (mesh.has_uvs()) out.uvs.push_back(mesh.uvs[v]);
        if (mesh.has_normals()) out.normals.push_back(mesh.normals[v]);
        it = remap.insert({v, idx}).first;
      }
      tri[k] = it->second;
    }
    out.triangles.push_back(tri);
  }
  if (out.triangles.empty()) throw DataError("no triangle centroids fall inside the region");
  return out;
}

}  // namespace vdmforge
