#pragma once

#include <cmath>
#include <map>
#include <numbers>

#include "vdmforge/mesh.hpp"
#include "vdmforge/rng.hpp"

namespace vdmforge::fixtures {

inline TriMesh unit_square() {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

// Axis-aligned cube with outward-facing triangles.
inline TriMesh cube(const Vec3& lo = {0, 0, 0}, const Vec3& hi = {1, 1, 1}) {
  TriMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back({i & 1 ? hi.x : lo.x, i & 2 ? hi.y : lo.y, i & 4 ? hi.z : lo.z});
  auto quad = [&](int a, int b, int c, int d) {
    m.triangles.push_back({a, b, c});
    m.triangles.push_back({a, c, d});
  };
  quad(0, 2, 3, 1);  // z = lo (normal -z)
  quad(4, 5, 7, 6);  // z = hi (normal +z)
  quad(0, 1, 5, 4);  // y = lo (normal -y)
  quad(2, 6, 7, 3);  // y = hi (normal +y)
  quad(0, 4, 6, 2);  // x = lo (normal -x)
  quad(1, 3, 7, 5);  // x = hi (normal +x)
  return m;
}

inline TriMesh icosphere(int subdivisions = 2, double radius = 1.0,
                         const Vec3& center = {0, 0, 0}) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find({key.first, key.second});
      if (it != midpoint.end()) return it->second;
      int idx = m.vertex_count();
      m.vertices.push_back((m.vertices[a] + m.vertices[b]) * 0.5);
      midpoint[{key.first, key.second}] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto& tri : m.triangles) {
      int ab = mid(tri[0], tri[1]), bc = mid(tri[1], tri[2]), ca = mid(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.triangles = std::move(next);
  }
  for (auto& v : m.vertices) v = center + normalized(v) * radius;
  return m;
}

inline TriMesh torus(int nu = 48, int nv = 24, double major = 1.0, double minor = 0.35) {
  TriMesh m;
  for (int i = 0; i < nu; ++i) {
    double theta = 2.0 * std::numbers::pi * i / nu;
    for (int j = 0; j < nv; ++j) {
      double phi = 2.0 * std::numbers::pi * j / nv;
      double w = major + minor * std::cos(phi);
      m.vertices.push_back({w * std::cos(theta), w * std::sin(theta), minor * std::sin(phi)});
    }
  }
  auto vid = [&](int i, int j) { return (i % nu) * nv + (j % nv); };
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      m.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      m.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  return m;
}

// nx x ny cell grid on z=0 over [0,1]^2.
inline TriMesh plane_grid(int nx, int ny) {
  TriMesh m;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.vertices.push_back({static_cast<double>(i) / nx, static_cast<double>(j) / ny, 0});
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      m.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      m.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  return m;
}

// Forced float32 rounding; the volatile blocks the vectorizer from fusing
// the narrowing cast away.
inline double snap_f32(double x) {
  volatile float f = static_cast<float>(x);
  return f;
}

// Grid with jittered float32-representable coordinates; manifold with one
// boundary loop.
inline TriMesh random_patch(uint64_t seed, int nx = 6, int ny = 6) {
  TriMesh m = plane_grid(nx, ny);
  SplitMix64 rng(seed);
  for (auto& v : m.vertices) {
    v.x = snap_f32(v.x + 0.3 / nx * (rng.next_uniform() - 0.5));
    v.y = snap_f32(v.y + 0.3 / ny * (rng.next_uniform() - 0.5));
    v.z = snap_f32(0.2 * (rng.next_uniform() - 0.5));
  }
  return m;
}

inline std::vector<Vec3> random_points(uint64_t seed, int n, double lo = -1.0,
                                       double hi = 1.0) {
  SplitMix64 rng(seed);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) {
    p.x = lo + (hi - lo) * rng.next_uniform();
    p.y = lo + (hi - lo) * rng.next_uniform();
    p.z = lo + (hi - lo) * rng.next_uniform();
  }
  return pts;
}

}  // namespace vdmforge::fixtures
