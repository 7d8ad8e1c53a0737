#include "vdmforge/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vdmforge/bvh.hpp"
#include "vdmforge/errors.hpp"
#include "vdmforge/fit.hpp"
#include "vdmforge/sampling.hpp"

namespace vdmforge {

CameraBasis camera_basis(const CameraPose& pose) {
  if (pose.elevation_deg < -90.0 || pose.elevation_deg > 90.0)
    throw DataError("elevation must be in [-90, 90]");
  const double e = pose.elevation_deg * std::numbers::pi / 180.0;
  const double a = pose.azimuth_deg * std::numbers::pi / 180.0;
  CameraBasis basis;
  basis.z = {-std::cos(e) * std::sin(a), std::sin(e), std::cos(e) * std::cos(a)};
  Vec3 up{0, 1, 0};
  Vec3 x = cross(up, basis.z);
  if (norm(x) < 1e-9) x = {1, 0, 0};  // looking straight up/down
  basis.x = normalized(x);
  basis.y = cross(basis.z, basis.x);
  return basis;
}

std::vector<CameraPose> standard_poses(PoseSet kind, double frame_width, int resolution) {
  std::vector<std::pair<double, double>> angles;
  if (kind == PoseSet::Generation) {
    angles = {{0, -60}, {0, -30}, {0, 30}, {0, 60}, {45, 0}, {-45, 0}};
  } else {
    angles = {{0, 60},  {0, -60}, {0, 45},  {0, -45}, {0, 30},  {0, -30}, {60, 0},
              {-60, 0}, {45, 0},  {-45, 0}, {30, 0},  {-30, 0}, {0, 0}};
  }
  std::vector<CameraPose> poses;
  for (auto [e, a] : angles) poses.push_back({e, a, frame_width, resolution});
  return poses;
}

namespace {

Vec3 mesh_center(const TriMesh& mesh) {
  if (mesh.vertices.empty()) throw DataError("cannot render an empty mesh");
  Vec3 mn = mesh.vertices[0], mx = mesh.vertices[0];
  for (const auto& v : mesh.vertices)
    for (int a = 0; a < 3; ++a) {
      mn[a] = std::min(mn[a], v[a]);
      mx[a] = std::max(mx[a], v[a]);
    }
  return (mn + mx) * 0.5;
}

double mesh_radius(const TriMesh& mesh, const Vec3& center) {
  double r = 0.0;
  for (const auto& v : mesh.vertices) r = std::max(r, norm(v - center));
  return r;
}

struct OrthoFrame {
  Vec3 center;
  CameraBasis basis;
  double start;  // ray launch distance along +z
};

OrthoFrame make_frame(const TriMesh& mesh, const CameraPose& pose) {
  OrthoFrame f;
  f.center = mesh_center(mesh);
  f.basis = camera_basis(pose);
  f.start = mesh_radius(mesh, f.center) + 1.0;
  return f;
}

// Pixel (px, py) -> ray origin; row 0 is the image top.
Vec3 pixel_origin(const OrthoFrame& f, const CameraPose& pose, int px, int py) {
  double u = ((px + 0.5) / pose.resolution - 0.5) * pose.frame_width;
  double v = (0.5 - (py + 0.5) / pose.resolution) * pose.frame_width;
  return f.center + f.basis.x * u + f.basis.y * v + f.basis.z * f.start;
}

}  // namespace

ImageRgb render_normals(const TriMesh& mesh, const CameraPose& pose) {
  if (mesh.triangles.empty()) throw DataError("cannot render an empty mesh");
  TriBvh bvh(mesh);
  OrthoFrame frame = make_frame(mesh, pose);
  const Vec3 dir = -frame.basis.z;

  ImageRgb img;
  img.width = img.height = pose.resolution;
  img.data.assign(3 * static_cast<size_t>(pose.resolution) * pose.resolution, 0.0f);
#pragma omp parallel for schedule(static, 4)
  for (int py = 0; py < pose.resolution; ++py) {
    for (int px = 0; px < pose.resolution; ++px) {
      RayHit hit = bvh.raycast(pixel_origin(frame, pose, px, py), dir);
      Vec3 n{0, 0, 1};  // background faces the camera
      if (hit.valid()) {
        n = triangle_normal(mesh, hit.triangle);
        if (dot(n, frame.basis.z) < 0.0) n = -n;  // flip toward the camera
        n = {dot(n, frame.basis.x), dot(n, frame.basis.y), dot(n, frame.basis.z)};
      }
      float* out = img.px(px, py);
      out[0] = static_cast<float>((n.x + 1.0) * 0.5);
      out[1] = static_cast<float>((n.y + 1.0) * 0.5);
      out[2] = static_cast<float>((n.z + 1.0) * 0.5);
    }
  }
  return img;
}

ImageGray render_gray(const TriMesh& mesh, const CameraPose& pose,
                      const Vec3& light_direction) {
  if (std::abs(norm(light_direction) - 1.0) > 1e-6)
    throw DataError("light direction must be a unit vector");
  TriBvh bvh(mesh);
  OrthoFrame frame = make_frame(mesh, pose);
  const Vec3 dir = -frame.basis.z;

  ImageGray img;
  img.width = img.height = pose.resolution;
  img.data.assign(static_cast<size_t>(pose.resolution) * pose.resolution, 0.5f);
#pragma omp parallel for schedule(static, 4)
  for (int py = 0; py < pose.resolution; ++py) {
    for (int px = 0; px < pose.resolution; ++px) {
      RayHit hit = bvh.raycast(pixel_origin(frame, pose, px, py), dir);
      if (!hit.valid()) continue;
      Vec3 n = triangle_normal(mesh, hit.triangle);
      if (dot(n, frame.basis.z) < 0.0) n = -n;
      Vec3 n_cam{dot(n, frame.basis.x), dot(n, frame.basis.y), dot(n, frame.basis.z)};
      double lambert = std::max(0.0, dot(n_cam, light_direction));
      img.px(px, py) = static_cast<float>(0.2 + 0.8 * lambert);
    }
  }
  return img;
}

double chamfer_metric(const TriMesh& a, const TriMesh& b, int samples, uint64_t seed) {
  if (a.triangles.empty() || b.triangles.empty())
    throw DataError("chamfer metric requires nonempty meshes");
  OrientedPointSet pa = sample_surface(a, samples, seed);
  OrientedPointSet pb = sample_surface(b, samples, seed);
  return chamfer_loss(pa.points, pb.points).loss;
}

}  // namespace vdmforge
