#include "vdmforge/reference.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "vdmforge/bvh.hpp"
#include "vdmforge/errors.hpp"

namespace vdmforge::reference {

double solid_angle_spherical_excess(const Vec3& a, const Vec3& b, const Vec3& c,
                                    const Vec3& q) {
  Vec3 u = normalized(a - q), v = normalized(b - q), w = normalized(c - q);
  auto arc = [](const Vec3& p, const Vec3& r) {
    return std::atan2(norm(cross(p, r)), dot(p, r));
  };
  double al = arc(v, w), be = arc(w, u), ga = arc(u, v);
  double s = 0.5 * (al + be + ga);
  double t = std::tan(s * 0.5) * std::tan((s - al) * 0.5) * std::tan((s - be) * 0.5) *
             std::tan((s - ga) * 0.5);
  double excess = 4.0 * std::atan(std::sqrt(std::max(t, 0.0)));
  double sign = dot(u, cross(v, w)) >= 0.0 ? 1.0 : -1.0;
  return sign * excess;
}

namespace {

// Centroid-rule estimate of the solid-angle integrand (r_hat . n) / r^2 over
// one flat triangle.
double quadrature_estimate(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& q) {
  Vec3 centroid = (a + b + c) / 3.0;
  Vec3 an = cross(b - a, c - a) * 0.5;  // area-weighted normal
  Vec3 r = centroid - q;
  double d = norm(r);
  return dot(an, r) / (d * d * d);
}

double quadrature_recurse(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& q,
                          double tol, int depth) {
  double whole = quadrature_estimate(a, b, c, q);
  Vec3 ab = (a + b) * 0.5, bc = (b + c) * 0.5, ca = (c + a) * 0.5;
  double split = quadrature_estimate(a, ab, ca, q) + quadrature_estimate(ab, b, bc, q) +
                 quadrature_estimate(ca, bc, c, q) + quadrature_estimate(ab, bc, ca, q);
  if (depth > 24 || std::abs(split - whole) < tol) return split;
  double child_tol = tol / 4.0;
  return quadrature_recurse(a, ab, ca, q, child_tol, depth + 1) +
         quadrature_recurse(ab, b, bc, q, child_tol, depth + 1) +
         quadrature_recurse(ca, bc, c, q, child_tol, depth + 1) +
         quadrature_recurse(ab, bc, ca, q, child_tol, depth + 1);
}

}  // namespace

double solid_angle_quadrature(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& q,
                              double tol) {
  return quadrature_recurse(a, b, c, q, tol, 0);
}

double winding_number_excess(const TriMesh& mesh, const Vec3& q) {
  double omega = 0.0;
  for (const auto& tri : mesh.triangles)
    omega += solid_angle_spherical_excess(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                          mesh.vertices[tri[2]], q);
  return omega / (4.0 * std::numbers::pi);
}

Nearest nearest_bruteforce(const std::vector<Vec3>& points, const Vec3& q) {
  Nearest best;
  best.sq_dist = std::numeric_limits<double>::max();
  for (size_t i = 0; i < points.size(); ++i) {
    double dx = q.x - points[i].x, dy = q.y - points[i].y, dz = q.z - points[i].z;
    double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < best.sq_dist) {
      best.sq_dist = d2;
      best.index = static_cast<int>(i);
    }
  }
  return best;
}

BruteChamfer chamfer_bruteforce(const std::vector<Vec3>& P, const std::vector<Vec3>& Q) {
  BruteChamfer res;
  res.nearest_in_q.resize(P.size());
  res.nearest_in_p.resize(Q.size());
  double l1 = 0.0, l2 = 0.0;
  for (size_t i = 0; i < P.size(); ++i) {
    Nearest n = nearest_bruteforce(Q, P[i]);
    res.nearest_in_q[i] = n.index;
    l1 += n.sq_dist;
  }
  for (size_t j = 0; j < Q.size(); ++j) {
    Nearest n = nearest_bruteforce(P, Q[j]);
    res.nearest_in_p[j] = n.index;
    l2 += n.sq_dist;
  }
  res.loss = l1 / static_cast<double>(P.size()) + l2 / static_cast<double>(Q.size());
  return res;
}

std::vector<Vec3> mlp_forward_reference(const MlpField<double>& field,
                                        const std::vector<Vec2>& inputs) {
  const int h = field.hidden_width();
  const double slope = 0.01;
  const auto& p = field.params();
  std::vector<Vec3> out;
  out.reserve(inputs.size());

  std::vector<double> cur, next;
  for (const Vec2& in : inputs) {
    cur = {in.x, in.y};
    for (int layer = 1; layer <= 8; ++layer) {
      const int nin = layer == 1 ? 2 : h;
      const int nout = layer == 8 ? 3 : h;
      const double* W = p.data() + field.weight_offset(layer);
      const double* b = p.data() + field.bias_offset(layer);
      next.assign(nout, 0.0);
      for (int j = 0; j < nout; ++j) {
        double acc = b[j];
        for (int i = 0; i < nin; ++i) acc += cur[i] * W[static_cast<size_t>(i) * nout + j];
        next[j] = acc;
      }
      if (layer < 8)
        for (int j = 0; j < nout; ++j) next[j] = next[j] > 0.0 ? next[j] : slope * next[j];
      if (layer == 4) {
        // cur still holds the layer-4 input here; the skip adds it to the
        // activated output.
        for (int j = 0; j < nout; ++j) next[j] += cur[j];
      }
      cur = next;
    }
    out.push_back({cur[0], cur[1], cur[2]});
  }
  return out;
}

TriMesh deform_dense_reference(const PartPatch& patch, const std::vector<Vec3>& Bprime) {
  const auto& B = patch.boundary.vertex_indices;
  TriMesh out = patch.mesh;
  for (size_t i = 0; i < B.size(); ++i) out.vertices[B[i]] = Bprime[i];
  const int na = static_cast<int>(patch.interior.size());
  if (na == 0) return out;

  std::vector<int> interior_id(patch.mesh.vertices.size(), -1);
  for (int i = 0; i < na; ++i) interior_id[patch.interior[i]] = i;
  std::map<int, Vec3> pinned;
  for (size_t i = 0; i < B.size(); ++i) pinned[B[i]] = Bprime[i];

  // Assemble the full quadratic: for each edge (p,q) and coordinate, the
  // term ((xp' - xq') - (xp - xq))^2 contributes to the normal equations.
  for (int coord = 0; coord < 3; ++coord) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(na, na);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(na);
    for (const auto& [p, q] : patch.edges) {
      double d = patch.mesh.vertices[p][coord] - patch.mesh.vertices[q][coord];
      int ip = interior_id[p], iq = interior_id[q];
      if (ip >= 0 && iq >= 0) {
        A(ip, ip) += 1;
        A(iq, iq) += 1;
        A(ip, iq) -= 1;
        A(iq, ip) -= 1;
        rhs(ip) += d;
        rhs(iq) -= d;
      } else if (ip >= 0) {
        A(ip, ip) += 1;
        rhs(ip) += d + pinned.at(q)[coord];
      } else if (iq >= 0) {
        A(iq, iq) += 1;
        rhs(iq) += -d + pinned.at(p)[coord];
      }
    }
    Eigen::VectorXd x = A.ldlt().solve(rhs);
    for (int i = 0; i < na; ++i) out.vertices[patch.interior[i]][coord] = x(i);
  }
  return out;
}

Vec3 plane_normal_svd(const std::vector<Vec3>& points) {
  Vec3 centroid{0, 0, 0};
  for (const auto& p : points) centroid += p;
  centroid = centroid / static_cast<double>(points.size());
  Eigen::MatrixXd M(points.size(), 3);
  for (size_t i = 0; i < points.size(); ++i) {
    M(i, 0) = points[i].x - centroid.x;
    M(i, 1) = points[i].y - centroid.y;
    M(i, 2) = points[i].z - centroid.z;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinV);
  Eigen::Vector3d n = svd.matrixV().col(2);
  Vec3 out{n.x(), n.y(), n.z()};
  int dominant = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(out[a]) > std::abs(out[dominant])) dominant = a;
  return out[dominant] < 0.0 ? -out : out;
}

ImageRgb render_normals_bruteforce(const TriMesh& mesh, const CameraPose& pose) {
  CameraBasis basis = camera_basis(pose);
  Vec3 mn = mesh.vertices[0], mx = mesh.vertices[0];
  for (const auto& v : mesh.vertices)
    for (int a = 0; a < 3; ++a) {
      mn[a] = std::min(mn[a], v[a]);
      mx[a] = std::max(mx[a], v[a]);
    }
  Vec3 center = (mn + mx) * 0.5;
  double radius = 0.0;
  for (const auto& v : mesh.vertices) radius = std::max(radius, norm(v - center));
  const double start = radius + 1.0;
  const Vec3 dir = -basis.z;

  ImageRgb img;
  img.width = img.height = pose.resolution;
  img.data.assign(3 * static_cast<size_t>(pose.resolution) * pose.resolution, 0.0f);
  for (int py = 0; py < pose.resolution; ++py) {
    for (int px = 0; px < pose.resolution; ++px) {
      double u = ((px + 0.5) / pose.resolution - 0.5) * pose.frame_width;
      double v = (0.5 - (py + 0.5) / pose.resolution) * pose.frame_width;
      Vec3 origin = center + basis.x * u + basis.y * v + basis.z * start;
      int best_tri = -1;
      double best_t = std::numeric_limits<double>::max();
      for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        double hit_t;
        if (ray_triangle_intersect(origin, dir, mesh.vertices[tri[0]],
                                   mesh.vertices[tri[1]], mesh.vertices[tri[2]], &hit_t)) {
          if (hit_t < best_t) {
            best_t = hit_t;
            best_tri = t;
          }
        }
      }
      Vec3 n{0, 0, 1};
      if (best_tri >= 0) {
        n = triangle_normal(mesh, best_tri);
        if (dot(n, basis.z) < 0.0) n = -n;
        n = {dot(n, basis.x), dot(n, basis.y), dot(n, basis.z)};
      }
      float* out = img.px(px, py);
      out[0] = static_cast<float>((n.x + 1.0) * 0.5);
      out[1] = static_cast<float>((n.y + 1.0) * 0.5);
      out[2] = static_cast<float>((n.z + 1.0) * 0.5);
    }
  }
  return img;
}

double voxel_path_cost_bellman_ford(const VoxelGrid& grid, const Coord3& from,
                                    const Coord3& to) {
  std::vector<Coord3> coords(grid.occupancy.begin(), grid.occupancy.end());
  std::map<Coord3, int> ids;
  for (size_t i = 0; i < coords.size(); ++i) ids[coords[i]] = static_cast<int>(i);
  if (!ids.count(from) || !ids.count(to))
    throw DataError("path endpoint is not an occupied voxel");

  struct Edge {
    int u, v;
    double w;
  };
  std::vector<Edge> edges;
  const double step[4] = {0.0, 1.0, std::sqrt(2.0), std::sqrt(3.0)};
  for (size_t i = 0; i < coords.size(); ++i) {
    const Coord3& c = coords[i];
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          auto it = ids.find({c.x + dx, c.y + dy, c.z + dz});
          if (it != ids.end())
            edges.push_back({static_cast<int>(i), it->second,
                             step[std::abs(dx) + std::abs(dy) + std::abs(dz)]});
        }
  }
  std::vector<double> dist(coords.size(), std::numeric_limits<double>::infinity());
  dist[ids[from]] = 0.0;
  for (size_t pass = 0; pass + 1 < coords.size(); ++pass) {
    bool changed = false;
    for (const Edge& e : edges) {
      if (dist[e.u] + e.w < dist[e.v]) {
        dist[e.v] = dist[e.u] + e.w;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return dist[ids[to]];
}

void gemm_naive(const float* A, const float* B, float* C, int m, int k, int n) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      float acc = 0.0f;
      for (int kk = 0; kk < k; ++kk)
        acc += A[static_cast<size_t>(i) * k + kk] * B[static_cast<size_t>(kk) * n + j];
      C[static_cast<size_t>(i) * n + j] = acc;
    }
}

}  // namespace vdmforge::reference
