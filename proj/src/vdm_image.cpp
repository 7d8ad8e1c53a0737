#include "vdmforge/vdm_image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "vdmforge/errors.hpp"

namespace vdmforge {

VdmImage make_vdm(int resolution) {
  if (resolution < 16 || resolution > 4096)
    throw DataError("VDM resolution must be in [16, 4096]");
  VdmImage vdm;
  vdm.resolution = resolution;
  vdm.data.assign(3 * static_cast<size_t>(resolution) * resolution, 0.0f);
  return vdm;
}

Vec3 sample_vdm(const VdmImage& vdm, const Vec2& uv) {
  const int R = vdm.resolution;
  auto axis = [&](double t) {
    double x = t * R - 0.5;
    x = std::clamp(x, 0.0, static_cast<double>(R - 1));
    int i0 = std::min(static_cast<int>(x), R - 1);
    int i1 = std::min(i0 + 1, R - 1);
    return std::tuple<int, int, double>(i0, i1, x - i0);
  };
  auto [i0, i1, fu] = axis(uv.x);
  auto [j0, j1, fv] = axis(uv.y);
  Vec3 out;
  for (int c = 0; c < 3; ++c) {
    double v00 = vdm.pixel(i0, j0)[c], v10 = vdm.pixel(i1, j0)[c];
    double v01 = vdm.pixel(i0, j1)[c], v11 = vdm.pixel(i1, j1)[c];
    out[c] = (v00 * (1 - fu) + v10 * fu) * (1 - fv) + (v01 * (1 - fu) + v11 * fu) * fv;
  }
  return out;
}

TriMesh apply_to_plane(const VdmImage& vdm, int subdivision) {
  if (subdivision < 2) throw DataError("subdivision must be >= 2");
  const int S = subdivision;
  TriMesh mesh;
  mesh.vertices.reserve(static_cast<size_t>(S) * S);
  mesh.uvs.reserve(static_cast<size_t>(S) * S);
  for (int j = 0; j < S; ++j) {
    for (int i = 0; i < S; ++i) {
      Vec2 uv{(i + 0.5) / S, (j + 0.5) / S};
      Vec3 d = S == vdm.resolution
                   ? Vec3{vdm.pixel(i, j)[0], vdm.pixel(i, j)[1], vdm.pixel(i, j)[2]}
                   : sample_vdm(vdm, uv);
      mesh.vertices.push_back({uv.x + d.x, uv.y + d.y, d.z});
      mesh.uvs.push_back(uv);
    }
  }
  auto vid = [&](int i, int j) { return j * S + i; };
  for (int j = 0; j + 1 < S; ++j) {
    for (int i = 0; i + 1 < S; ++i) {
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  }
  return mesh;
}

TriMesh apply_to_mesh(const VdmImage& vdm, const TriMesh& base, const UvRect& region,
                      double amplitude) {
  if (!base.has_uvs()) throw DataError("base mesh has no UVs");
  if (region.u1 <= region.u0 || region.v1 <= region.v0)
    throw DataError("degenerate UV region");

  const int nv = base.vertex_count();
  std::vector<Vec3> tangent(nv, Vec3{0, 0, 0}), bitangent(nv, Vec3{0, 0, 0});
  std::vector<Vec3> vnormal(nv, Vec3{0, 0, 0});

  for (int t = 0; t < base.triangle_count(); ++t) {
    const auto& tri = base.triangles[t];
    const Vec3& p0 = base.vertices[tri[0]];
    const Vec3& p1 = base.vertices[tri[1]];
    const Vec3& p2 = base.vertices[tri[2]];
    Vec2 w0 = base.uvs[tri[0]], w1 = base.uvs[tri[1]], w2 = base.uvs[tri[2]];
    Vec3 e1 = p1 - p0, e2 = p2 - p0;
    Vec2 d1 = w1 - w0, d2 = w2 - w0;
    double det = d1.x * d2.y - d2.x * d1.y;
    double area = 0.5 * norm(cross(e1, e2));
    for (int k = 0; k < 3; ++k) vnormal[tri[k]] += cross(e1, e2) * 0.5;
    if (std::abs(det) < 1e-14) continue;  // degenerate UV mapping on this face
    double r = 1.0 / det;
    Vec3 T = (e1 * d2.y - e2 * d1.y) * r;
    Vec3 B = (e2 * d1.x - e1 * d2.x) * r;
    for (int k = 0; k < 3; ++k) {
      tangent[tri[k]] += T * area;
      bitangent[tri[k]] += B * area;
    }
  }

  TriMesh out = base;
  std::string bad;
  for (int v = 0; v < nv; ++v) {
    if (!region.contains(base.uvs[v])) continue;
    Vec3 n = base.has_normals() ? base.normals[v] : normalized(vnormal[v]);
    Vec3 T = tangent[v] - n * dot(tangent[v], n);
    if (norm(T) < 1e-12 || norm(n) < 1e-12) {
      bad += (bad.empty() ? "" : ",") + std::to_string(v);
      continue;
    }
    T = normalized(T);
    Vec3 B = bitangent[v] - n * dot(bitangent[v], n) - T * dot(bitangent[v], T);
    if (norm(B) < 1e-12) {
      bad += (bad.empty() ? "" : ",") + std::to_string(v);
      continue;
    }
    B = normalized(B);
    Vec3 d = sample_vdm(vdm, region.normalize(base.uvs[v]));
    out.vertices[v] += (T * d.x + B * d.y + n * d.z) * amplitude;
  }
  if (!bad.empty())
    throw DataError("degenerate tangent frame at vertices [" + bad + "]");
  return out;
}

VdmImage resample(const VdmImage& vdm, int new_resolution) {
  if (new_resolution == vdm.resolution) return vdm;  // bitwise identity
  VdmImage out = make_vdm(new_resolution);
  out.metadata = vdm.metadata;
  const int R = new_resolution;
#pragma omp parallel for schedule(static, 16)
  for (int j = 0; j < R; ++j) {
    for (int i = 0; i < R; ++i) {
      Vec3 d = sample_vdm(vdm, {(i + 0.5) / R, (j + 0.5) / R});
      float* px = out.pixel(i, j);
      px[0] = static_cast<float>(d.x);
      px[1] = static_cast<float>(d.y);
      px[2] = static_cast<float>(d.z);
    }
  }
  return out;
}

namespace {
constexpr char kMagic[4] = {'V', 'D', 'M', 'F'};
constexpr uint32_t kVersion = 1;
}  // namespace

void write_vdm(const VdmImage& vdm, const std::string& path) {
  for (float v : vdm.data)
    if (!std::isfinite(v)) throw NumericError("VDM contains non-finite values");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(kMagic, 4);
  uint32_t version = kVersion, res = static_cast<uint32_t>(vdm.resolution);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&res), 4);
  out.write(reinterpret_cast<const char*>(vdm.data.data()),
            static_cast<std::streamsize>(vdm.data.size() * sizeof(float)));
  uint32_t meta_len = static_cast<uint32_t>(vdm.metadata.size());
  out.write(reinterpret_cast<const char*>(&meta_len), 4);
  out.write(vdm.metadata.data(), meta_len);
  if (!out) throw DataError("write failed: " + path);
}

VdmImage read_vdm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError(path + ": not a VDMF file (bad magic)");
  uint32_t version = 0, res = 0;
  if (!in.read(reinterpret_cast<char*>(&version), 4) || version != kVersion)
    throw DataError(path + ": unsupported VDMF version " + std::to_string(version));
  if (!in.read(reinterpret_cast<char*>(&res), 4) || res < 16 || res > 4096)
    throw DataError(path + ": invalid resolution");
  VdmImage vdm;
  vdm.resolution = static_cast<int>(res);
  vdm.data.resize(3 * static_cast<size_t>(res) * res);
  if (!in.read(reinterpret_cast<char*>(vdm.data.data()),
               static_cast<std::streamsize>(vdm.data.size() * sizeof(float))))
    throw DataError(path + ": truncated pixel payload");
  uint32_t meta_len = 0;
  if (!in.read(reinterpret_cast<char*>(&meta_len), 4))
    throw DataError(path + ": truncated metadata length");
  vdm.metadata.resize(meta_len);
  if (meta_len > 0 && !in.read(vdm.metadata.data(), meta_len))
    throw DataError(path + ": truncated metadata block");
  for (float v : vdm.data)
    if (!std::isfinite(v)) throw DataError(path + ": non-finite pixel values");
  return vdm;
}

}  // namespace vdmforge
