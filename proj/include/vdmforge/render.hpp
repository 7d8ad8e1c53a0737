#pragma once

#include <cstdint>
#include <vector>

#include "vdmforge/mesh.hpp"

namespace vdmforge {

// Orthographic camera by elevation/azimuth (degrees). With world up +y and
// the frontal view along +z, azimuth `a` and elevation `e` place the camera
// direction at v = (-cos e sin a, sin e, cos e cos a); the camera basis is
// x = normalize(up x v), y = v x x, z = v. At (0, 0) this is the identity,
// and a plane with normal +z seen at azimuth a encodes camera-space
// normal x = sin a.
struct CameraPose {
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;
  double frame_width = 1.2;  // model units covered by the image width
  int resolution = 320;      // square images
};

struct CameraBasis {
  Vec3 x, y, z;  // right, up, toward camera
};
CameraBasis camera_basis(const CameraPose& pose);

enum class PoseSet { Generation, Evaluation };

// Generation: the six training poses. Evaluation: the thirteen review poses
// (pairs expand positive first, and (0,0) closes the list).
std::vector<CameraPose> standard_poses(PoseSet kind, double frame_width = 1.2,
                                       int resolution = 320);

// Float images, row-major, row 0 at the top.
struct ImageRgb {
  int width = 0, height = 0;
  std::vector<float> data;  // 3 * width * height

  float* px(int x, int y) { return data.data() + 3 * (static_cast<size_t>(y) * width + x); }
  const float* px(int x, int y) const {
    return data.data() + 3 * (static_cast<size_t>(y) * width + x);
  }
};

struct ImageGray {
  int width = 0, height = 0;
  std::vector<float> data;

  float& px(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  float px(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

// Ray-cast orthographic normal map: per-pixel geometric normal of the nearest
// hit, flipped toward the camera, encoded as rgb = (n_cam + 1) / 2.
// Background pixels encode (0, 0, 1).
ImageRgb render_normals(const TriMesh& mesh, const CameraPose& pose);

// Lambertian gray shading: foreground 0.2 + 0.8 * max(0, n_cam . light),
// background 0.5. light_direction is unit, in camera space.
ImageGray render_gray(const TriMesh& mesh, const CameraPose& pose,
                      const Vec3& light_direction);

// Symmetric squared chamfer over `samples` surface samples of each mesh,
// both drawn with the same seed.
double chamfer_metric(const TriMesh& a, const TriMesh& b, int samples, uint64_t seed);

}  // namespace vdmforge
