#include "vdmforge/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vdmforge/errors.hpp"
#include "vdmforge/rng.hpp"

namespace vdmforge {

OrientedPointSet sample_surface(const TriMesh& mesh, int n, uint64_t seed,
                                int* skipped_triangles) {
  if (n < 1) throw DataError("sample count must be >= 1");

  const int nt = mesh.triangle_count();
  std::vector<double> cumulative(nt);
  std::vector<Vec3> face_normals(nt);
  double total = 0.0;
  int skipped = 0;
  for (int t = 0; t < nt; ++t) {
    double a = triangle_area(mesh, t);
    if (a < 1e-12) {
      a = 0.0;
      ++skipped;
    }
    total += a;
    cumulative[t] = total;
    face_normals[t] = triangle_normal(mesh, t);
  }
  if (skipped_triangles) *skipped_triangles = skipped;
  if (total <= 0.0) throw NumericError("mesh has zero total area");

  OrientedPointSet out;
  out.points.resize(n);
  out.normals.resize(n);
  const SplitMix64 rng(seed);

#pragma omp parallel for schedule(static, 1024)
  for (int i = 0; i < n; ++i) {
    double pick = rng.uniform(3 * static_cast<uint64_t>(i)) * total;
    int t = static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) -
                             cumulative.begin());
    if (t >= nt) t = nt - 1;
    double r1 = std::sqrt(rng.uniform(3 * static_cast<uint64_t>(i) + 1));
    double r2 = rng.uniform(3 * static_cast<uint64_t>(i) + 2);
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    out.points[i] = a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
    out.normals[i] = face_normals[t];
  }
  return out;
}

}  // namespace vdmforge
