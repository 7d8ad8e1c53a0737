#pragma once

#include <array>
#include <string>
#include <vector>

#include "vdmforge/mesh.hpp"

namespace vdmforge {

// R x R grid of 3D displacement vectors in the plane-local (t, b, n) frame,
// in units of the tile side. Pixel (i, j) samples ((i+0.5)/R, (j+0.5)/R);
// i is the u (t) axis, j the v (b) axis. Stored as float32, matching the
// file format bit for bit.
struct VdmImage {
  int resolution = 0;
  std::vector<float> data;  // 3 * R * R, channel order t, b, n
  std::string metadata;     // JSON blob: source id, seed, amplitude convention

  float* pixel(int i, int j) { return data.data() + 3 * (static_cast<size_t>(j) * resolution + i); }
  const float* pixel(int i, int j) const {
    return data.data() + 3 * (static_cast<size_t>(j) * resolution + i);
  }
};

VdmImage make_vdm(int resolution);

// Bilinear interpolation over pixel centers, clamped at the borders; exact
// stored values at pixel centers.
Vec3 sample_vdm(const VdmImage& vdm, const Vec2& uv);

// Unit-square grid in the canonical frame (t=+x, b=+y, n=+z) with
// subdivision^2 vertices placed at VDM pixel-center parameters
// ((i+0.5)/S, (j+0.5)/S), each displaced by the sampled vector. UVs stored.
// At S == resolution the vertices reproduce the stored pixels exactly.
TriMesh apply_to_plane(const VdmImage& vdm, int subdivision);

// Rectangle of UV space the stamp occupies on the base mesh.
struct UvRect {
  double u0 = 0.0, v0 = 0.0, u1 = 1.0, v1 = 1.0;

  bool contains(const Vec2& uv) const {
    return uv.x >= u0 && uv.x <= u1 && uv.y >= v0 && uv.y <= v1;
  }
  Vec2 normalize(const Vec2& uv) const {
    return {(uv.x - u0) / (u1 - u0), (uv.y - v0) / (v1 - v0)};
  }
};

// Displaces every base vertex whose uv falls inside `region` by
// amplitude * (d_t T + d_b B + d_n N), where (T, B, N) is the vertex tangent
// frame from UV partial derivatives (area-weighted over incident triangles,
// Gram-Schmidt orthonormalized against the vertex normal). Errors when an
// affected vertex has no usable frame.
TriMesh apply_to_mesh(const VdmImage& vdm, const TriMesh& base, const UvRect& region,
                      double amplitude);

// Bilinear resample at the new pixel centers. Same-resolution resampling is
// bitwise identity.
VdmImage resample(const VdmImage& vdm, int new_resolution);

// Raw format: "VDMF" | u32 version=1 | u32 R | 3*R^2 float32 LE row-major
// (pixel (i,j) at byte offset 12 + 12*(j*R+i), channels t,b,n) |
// u32 metadata length | metadata JSON. Bit-exact round trip.
void write_vdm(const VdmImage& vdm, const std::string& path);
VdmImage read_vdm(const std::string& path);

}  // namespace vdmforge
