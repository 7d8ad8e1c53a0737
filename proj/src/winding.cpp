#include "vdmforge/winding.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "vdmforge/bvh.hpp"
#include "vdmforge/errors.hpp"

namespace vdmforge {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr double kOnSurfaceTol = 1e-9;

// Signed solid angle of triangle (a,b,c) as seen from q (van Oosterom &
// Strackee 1983).
double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& q) {
  Vec3 ra = a - q, rb = b - q, rc = c - q;
  double la = norm(ra), lb = norm(rb), lc = norm(rc);
  double numer = dot(ra, cross(rb, rc));
  double denom = la * lb * lc + dot(ra, rb) * lc + dot(rb, rc) * la + dot(rc, ra) * lb;
  return 2.0 * std::atan2(numer, denom);
}

void check_off_surface(const TriMesh& mesh, const Vec3& q) {
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    double d2 = point_triangle_sq_dist(q, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                       mesh.vertices[tri[2]]);
    if (d2 <= kOnSurfaceTol * kOnSurfaceTol)
      throw DataError("query point lies on triangle " + std::to_string(t) +
                      "; perturb it before evaluating the winding number");
  }
}

}  // namespace

double winding_number_exact(const TriMesh& mesh, const Vec3& q) {
  check_off_surface(mesh, q);
  double omega = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    omega += triangle_solid_angle(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                  mesh.vertices[tri[2]], q);
  }
  return omega / kFourPi;
}

struct WindingTree::Impl {
  struct Node {
    Vec3 centroid{0, 0, 0};  // area-weighted triangle centroid
    Vec3 dipole{0, 0, 0};    // sum of area-weighted face normals
    double area = 0.0;
    double radius = 0.0;  // max distance from centroid to any node vertex
    int children[8] = {-1, -1, -1, -1, -1, -1, -1, -1};
    int begin = 0, end = 0;  // triangle range for leaves
    bool leaf = false;
  };

  const TriMesh* mesh = nullptr;
  std::vector<Node> nodes;
  std::vector<int> tri_order;
  double total_area = 1.0;
  double eps_total = 1e-5;

  static constexpr int kLeafSize = 32;

  int build(std::vector<int>& tris, int lo, int hi, const Vec3& box_min, const Vec3& box_max,
            int depth) {
    int id = static_cast<int>(nodes.size());
    nodes.push_back({});
    Node nd;
    Vec3 weighted{0, 0, 0};
    for (int i = lo; i < hi; ++i) {
      int t = tris[i];
      const auto& tri = mesh->triangles[t];
      Vec3 e1 = mesh->vertices[tri[1]] - mesh->vertices[tri[0]];
      Vec3 e2 = mesh->vertices[tri[2]] - mesh->vertices[tri[0]];
      Vec3 an = cross(e1, e2) * 0.5;  // area-weighted normal
      double a = norm(an);
      nd.area += a;
      nd.dipole += an;
      weighted += triangle_centroid(*mesh, t) * a;
    }
    nd.centroid = nd.area > 0 ? weighted / nd.area : (box_min + box_max) * 0.5;
    for (int i = lo; i < hi; ++i) {
      const auto& tri = mesh->triangles[tris[i]];
      for (int k = 0; k < 3; ++k)
        nd.radius = std::max(nd.radius, norm(mesh->vertices[tri[k]] - nd.centroid));
    }
    nd.begin = lo;
    nd.end = hi;
    if (hi - lo <= kLeafSize || depth > 24) {
      nd.leaf = true;
      nodes[id] = nd;
      return id;
    }
    // Partition triangles into octants of the box midpoint by centroid.
    Vec3 mid = (box_min + box_max) * 0.5;
    auto octant = [&](int t) {
      Vec3 c = triangle_centroid(*mesh, t);
      return (c.x >= mid.x ? 1 : 0) | (c.y >= mid.y ? 2 : 0) | (c.z >= mid.z ? 4 : 0);
    };
    std::stable_sort(tris.begin() + lo, tris.begin() + hi,
                     [&](int a, int b) { return octant(a) < octant(b); });
    int start = lo;
    for (int o = 0; o < 8; ++o) {
      int stop = start;
      while (stop < hi && octant(tris[stop]) == o) ++stop;
      if (stop > start) {
        Vec3 cmin = box_min, cmax = box_max;
        ((o & 1) ? cmin.x : cmax.x) = mid.x;
        ((o & 2) ? cmin.y : cmax.y) = mid.y;
        ((o & 4) ? cmin.z : cmax.z) = mid.z;
        if (stop - start == hi - lo) {
          // All centroids in one octant; make a leaf to avoid recursion loops.
          nd.leaf = true;
          nodes[id] = nd;
          return id;
        }
        nd.children[o] = build(tris, start, stop, cmin, cmax, depth + 1);
      }
      start = stop;
    }
    nodes[id] = nd;
    return id;
  }

  double evaluate_node(int id, const Vec3& q) const {
    const Node& nd = nodes[id];
    Vec3 d = nd.centroid - q;
    double dist = norm(d);
    if (dist > 2.0 * nd.radius && nd.radius > 0.0) {
      double gap = dist - nd.radius;
      double bound = 3.0 / kFourPi * nd.area * (2.0 * nd.radius) / (gap * gap * gap);
      if (bound < eps_total * (nd.area / total_area)) return dot(nd.dipole, d) / (dist * dist * dist);
    }
    if (nd.leaf || nd.radius == 0.0) {
      double omega = 0.0;
      for (int i = nd.begin; i < nd.end; ++i) {
        const auto& tri = mesh->triangles[tri_order[i]];
        omega += triangle_solid_angle(mesh->vertices[tri[0]], mesh->vertices[tri[1]],
                                      mesh->vertices[tri[2]], q);
      }
      return omega;
    }
    double omega = 0.0;
    for (int c : nd.children)
      if (c >= 0) omega += evaluate_node(c, q);
    return omega;
  }
};

WindingTree::WindingTree(const TriMesh& mesh) : impl_(std::make_unique<Impl>()) {
  impl_->mesh = &mesh;
  impl_->tri_order.resize(mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) impl_->tri_order[t] = t;
  impl_->total_area = std::max(total_area(mesh), 1e-300);
  if (mesh.triangle_count() > 0) {
    Vec3 mn = mesh.vertices[0], mx = mesh.vertices[0];
    for (const auto& v : mesh.vertices) {
      for (int a = 0; a < 3; ++a) {
        mn[a] = std::min(mn[a], v[a]);
        mx[a] = std::max(mx[a], v[a]);
      }
    }
    impl_->build(impl_->tri_order, 0, mesh.triangle_count(), mn, mx, 0);
  }
}

WindingTree::~WindingTree() = default;
WindingTree::WindingTree(WindingTree&&) noexcept = default;
WindingTree& WindingTree::operator=(WindingTree&&) noexcept = default;

double WindingTree::evaluate(const Vec3& q) const {
  if (impl_->nodes.empty()) return 0.0;
  return impl_->evaluate_node(0, q) / kFourPi;
}

double winding_number(const WindingTree& tree, const TriMesh& mesh, const Vec3& q) {
  check_off_surface(mesh, q);
  return tree.evaluate(q);
}

double winding_number(const TriMesh& mesh, const Vec3& q) {
  WindingTree tree(mesh);
  return winding_number(tree, mesh, q);
}

OrientedPointSet filter_interior(const OrientedPointSet& points, const TriMesh& mesh,
                                 double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw DataError("threshold must be in (0,1)");
  WindingTree tree(mesh);
  const int n = points.size();
  std::vector<char> keep(n, 0);
#pragma omp parallel for schedule(static, 256)
  for (int i = 0; i < n; ++i)
    keep[i] = std::abs(tree.evaluate(points.points[i])) < threshold ? 1 : 0;
  OrientedPointSet out;
  for (int i = 0; i < n; ++i) {
    if (keep[i]) {
      out.points.push_back(points.points[i]);
      out.normals.push_back(points.normals[i]);
    }
  }
  return out;
}

}  // namespace vdmforge
