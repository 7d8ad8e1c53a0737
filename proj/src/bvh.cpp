#include "vdmforge/bvh.hpp"

#include <algorithm>
#include <cmath>

namespace vdmforge {

bool ray_triangle_intersect(const Vec3& origin, const Vec3& dir, const Vec3& a,
                            const Vec3& b, const Vec3& c, double* t) {
  constexpr double kEps = 1e-12;
  Vec3 e1 = b - a, e2 = c - a;
  Vec3 pvec = cross(dir, e2);
  double det = dot(e1, pvec);
  if (std::abs(det) < kEps) return false;
  double inv_det = 1.0 / det;
  Vec3 tvec = origin - a;
  double u = dot(tvec, pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return false;
  Vec3 qvec = cross(tvec, e1);
  double v = dot(dir, qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return false;
  double hit_t = dot(e2, qvec) * inv_det;
  if (hit_t < 0.0) return false;
  *t = hit_t;
  return true;
}

double point_triangle_sq_dist(const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 ab = b - a, ac = c - a, aq = q - a;
  double d1 = dot(ab, aq), d2 = dot(ac, aq);
  if (d1 <= 0.0 && d2 <= 0.0) return norm2(aq);
  Vec3 bq = q - b;
  double d3 = dot(ab, bq), d4 = dot(ac, bq);
  if (d3 >= 0.0 && d4 <= d3) return norm2(bq);
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    double v = d1 / (d1 - d3);
    return norm2(aq - ab * v);
  }
  Vec3 cq = q - c;
  double d5 = dot(ab, cq), d6 = dot(ac, cq);
  if (d6 >= 0.0 && d5 <= d6) return norm2(cq);
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    double w = d2 / (d2 - d6);
    return norm2(aq - ac * w);
  }
  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return norm2(bq - (c - b) * w);
  }
  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom, w = vc * denom;
  return norm2(aq - ab * v - ac * w);
}

TriBvh::TriBvh(const TriMesh& mesh) : mesh_(&mesh) {
  const int nt = mesh.triangle_count();
  order_.resize(nt);
  centroids_.resize(nt);
  for (int t = 0; t < nt; ++t) {
    order_[t] = t;
    centroids_[t] = triangle_centroid(mesh, t);
  }
  nodes_.reserve(2 * nt / 4 + 2);
  if (nt > 0) build(0, nt);
}

int TriBvh::build(int lo, int hi) {
  constexpr int kLeafSize = 4;
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Node nd;
  nd.box_min = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
                std::numeric_limits<double>::max()};
  nd.box_max = {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
                std::numeric_limits<double>::lowest()};
  for (int i = lo; i < hi; ++i) {
    const auto& tri = mesh_->triangles[order_[i]];
    for (int k = 0; k < 3; ++k) {
      const Vec3& v = mesh_->vertices[tri[k]];
      for (int a = 0; a < 3; ++a) {
        nd.box_min[a] = std::min(nd.box_min[a], v[a]);
        nd.box_max[a] = std::max(nd.box_max[a], v[a]);
      }
    }
  }
  nd.begin = lo;
  nd.end = hi;
  if (hi - lo <= kLeafSize) {
    nodes_[id] = nd;
    return id;
  }
  Vec3 extent = nd.box_max - nd.box_min;
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (extent[a] > extent[axis]) axis = a;
  int mid = (lo + hi) / 2;
  std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                   [&](int a, int b) {
                     double ca = centroids_[a][axis], cb = centroids_[b][axis];
                     return ca != cb ? ca < cb : a < b;
                   });
  nd.left = build(lo, mid);
  nd.right = build(mid, hi);
  nodes_[id] = nd;
  return id;
}

namespace {

// Returns the slab-test entry distance, or +inf when the ray misses the box.
double box_entry(const Vec3& bmin, const Vec3& bmax, const Vec3& origin,
                 const Vec3& inv_dir) {
  double tmin = 0.0, tmax = std::numeric_limits<double>::max();
  for (int a = 0; a < 3; ++a) {
    double t1 = (bmin[a] - origin[a]) * inv_dir[a];
    double t2 = (bmax[a] - origin[a]) * inv_dir[a];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return std::numeric_limits<double>::max();
  }
  return tmin;
}

double box_sq_dist(const Vec3& bmin, const Vec3& bmax, const Vec3& q) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    double d = q[a] < bmin[a] ? bmin[a] - q[a] : (q[a] > bmax[a] ? q[a] - bmax[a] : 0.0);
    d2 += d * d;
  }
  return d2;
}

}  // namespace

void TriBvh::raycast_node(int node, const Vec3& origin, const Vec3& dir,
                          const Vec3& inv_dir, RayHit& best) const {
  const Node& nd = nodes_[node];
  // Strictly-greater pruning keeps equal-t candidates so the index tie-break
  // matches the linear scan.
  if (box_entry(nd.box_min, nd.box_max, origin, inv_dir) > best.t) return;
  if (nd.left < 0) {
    for (int i = nd.begin; i < nd.end; ++i) {
      int tri_id = order_[i];
      const auto& tri = mesh_->triangles[tri_id];
      double t;
      if (ray_triangle_intersect(origin, dir, mesh_->vertices[tri[0]],
                                 mesh_->vertices[tri[1]], mesh_->vertices[tri[2]], &t)) {
        if (t < best.t || (t == best.t && tri_id < best.triangle)) {
          best.t = t;
          best.triangle = tri_id;
        }
      }
    }
    return;
  }
  raycast_node(nd.left, origin, dir, inv_dir, best);
  raycast_node(nd.right, origin, dir, inv_dir, best);
}

RayHit TriBvh::raycast(const Vec3& origin, const Vec3& dir) const {
  RayHit best;
  if (nodes_.empty()) return best;
  Vec3 inv_dir{1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
  raycast_node(0, origin, dir, inv_dir, best);
  return best;
}

void TriBvh::closest_node(int node, const Vec3& q, Closest& best) const {
  const Node& nd = nodes_[node];
  if (box_sq_dist(nd.box_min, nd.box_max, q) > best.sq_dist) return;
  if (nd.left < 0) {
    for (int i = nd.begin; i < nd.end; ++i) {
      int tri_id = order_[i];
      const auto& tri = mesh_->triangles[tri_id];
      double d2 = point_triangle_sq_dist(q, mesh_->vertices[tri[0]], mesh_->vertices[tri[1]],
                                         mesh_->vertices[tri[2]]);
      if (d2 < best.sq_dist || (d2 == best.sq_dist && tri_id < best.triangle)) {
        best.sq_dist = d2;
        best.triangle = tri_id;
      }
    }
    return;
  }
  // Visit the nearer child first for tighter pruning.
  double dl = box_sq_dist(nodes_[nd.left].box_min, nodes_[nd.left].box_max, q);
  double dr = box_sq_dist(nodes_[nd.right].box_min, nodes_[nd.right].box_max, q);
  if (dl <= dr) {
    closest_node(nd.left, q, best);
    closest_node(nd.right, q, best);
  } else {
    closest_node(nd.right, q, best);
    closest_node(nd.left, q, best);
  }
}

TriBvh::Closest TriBvh::closest_point(const Vec3& q) const {
  Closest best;
  if (nodes_.empty()) return best;
  closest_node(0, q, best);
  return best;
}

}  // namespace vdmforge
