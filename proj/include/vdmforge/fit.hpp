#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vdmforge/field.hpp"
#include "vdmforge/flatten.hpp"
#include "vdmforge/mesh.hpp"
#include "vdmforge/vdm_image.hpp"

namespace vdmforge {

// proj: [0,1]^2 -> R^3, the square tile the field is anchored to.
struct SquareEmbedding {
  Plane plane;
  double side = 1.0;
  Vec3 center;

  Vec3 proj(const Vec2& p) const {
    return center + plane.tangent * (side * (p.x - 0.5)) +
           plane.bitangent * (side * (p.y - 0.5));
  }

  // t=+x, b=+y, n=+z, centered at the origin.
  static SquareEmbedding canonical(double side = 1.0);
};

struct FitConfig {
  double learning_rate = 5e-4;
  int epochs = 3000;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;

  int grid_side = 128;  // P: grid_side^2 jittered stratified samples per step
  int target_samples_per_step = 16384;   // Q subsample size per step
  int boundary_samples_per_step = 1024;  // dP samples per step
  double boundary_weight = 1.0;
  uint64_t seed = 0;

  // Held-out evaluation: mean squared distance from eval_points held-out
  // target samples to the triangulated fitted surface (eval_surface_grid^2
  // cells), plus mean squared distance from eval_points fitted-surface
  // samples to the target geometry (mesh triangles, or the full target point
  // set for bare-point targets).
  int eval_points = 100000;
  int eval_surface_grid = 384;
  int target_pool_samples = 1 << 20;  // training pool drawn from mesh targets

  // Early stop: when both are > 0, evaluate the held-out chamfer every
  // eval_interval epochs and stop once it drops below early_stop_chamfer.
  // Disabled by default, in which case exactly `epochs` steps run.
  double early_stop_chamfer = 0.0;
  int eval_interval = 0;

  // Plane initialization.
  int init_epochs = 1500;
  int init_grid = 32;
  double init_learning_rate = 1e-3;
  double init_target_mse = 1e-5;  // x side^2, on a 64x64 validation grid
  int init_polish_interval = 25;  // exact output-layer refit cadence; 0 = off

  std::string to_json() const;
};

struct FitReport {
  std::vector<double> loss_trace;      // total loss per epoch
  std::vector<double> chamfer_trace;
  std::vector<double> boundary_trace;
  int epochs_run = 0;
  double final_chamfer = -1.0;  // held-out metric, units of side^2
  double seconds = 0.0;
  uint64_t seed = 0;
  int thread_cap = 0;
  std::string config_json;

  std::string to_json() const;
};

// Symmetric squared chamfer between point sets, with the subgradient that
// treats the nearest-neighbor pairing as fixed. Nearest neighbors break ties
// toward the smaller index, matching a first-minimum linear scan.
struct ChamferResult {
  double loss = 0.0;
  std::vector<Vec3> grad_p;      // d loss / d P
  std::vector<int> nearest_in_q;  // per P point
  std::vector<int> nearest_in_p;  // per Q point
};
ChamferResult chamfer_loss(const std::vector<Vec3>& P, const std::vector<Vec3>& Q);

// Mean squared deviation of the field from proj over boundary samples
// (points on the edge of [0,1]^2). When param_grad is given, the exact
// parameter gradient is accumulated into it.
template <typename Real>
double boundary_loss(const MlpField<Real>& field, const std::vector<Vec2>& boundary_uv,
                     const SquareEmbedding& embedding,
                     std::vector<Real>* param_grad = nullptr);

struct InitReport {
  std::vector<double> loss_trace;  // validation MSE per epoch, units of side^2
  double final_mse = 0.0;
  int epochs_run = 0;
};

// Optimizes the field toward proj (Adam on the mean squared deviation over
// jittered grid batches, plus periodic exact least-squares refits of the
// output layer). Returns once the 64x64 validation-grid MSE drops below
// init_target_mse * side^2; throws NumericError carrying the final loss if
// the epoch budget is exhausted first.
template <typename Real>
InitReport init_to_plane(MlpField<Real>& field, const SquareEmbedding& embedding,
                         const FitConfig& config);

// Runs Adam on chamfer(P deformed, Q) + boundary_weight * boundary loss.
// P is a jittered stratified grid, dP uniform boundary samples, Q a seeded
// per-step subsample of the target pool. Deterministic for a fixed seed,
// independent of the thread cap.
FitReport fit(MlpField<float>& field, const OrientedPointSet& target,
              const SquareEmbedding& embedding, const FitConfig& config);
FitReport fit(MlpField<float>& field, const TriMesh& target,
              const SquareEmbedding& embedding, const FitConfig& config);

// Pixel (i,j) stores (field((i+0.5)/R, (j+0.5)/R) - proj(...)) in the
// (t, b, n) frame, in units of side.
VdmImage extract_vdm(const MlpField<float>& field, const SquareEmbedding& embedding,
                     int resolution);
VdmImage extract_vdm(const MlpField<double>& field, const SquareEmbedding& embedding,
                     int resolution);

// The held-out metric described on FitConfig, exposed for tests and the CLI.
double heldout_chamfer(const MlpField<float>& field, const SquareEmbedding& embedding,
                       const std::vector<Vec3>& heldout_points, const TriMesh* target_mesh,
                       const std::vector<Vec3>* target_points, const FitConfig& config);

}  // namespace vdmforge
