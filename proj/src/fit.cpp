#include "vdmforge/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>

#include "vdmforge/bvh.hpp"
#include "vdmforge/errors.hpp"
#include "vdmforge/kdtree.hpp"
#include "vdmforge/rng.hpp"
#include "vdmforge/sampling.hpp"
#include "vdmforge/threads.hpp"

namespace vdmforge {

namespace {

// Stream ids for the seeded sampler forks.
constexpr uint64_t kStreamGrid = 0x100000000ull;
constexpr uint64_t kStreamBoundary = 0x200000000ull;
constexpr uint64_t kStreamSubsample = 0x300000000ull;
constexpr uint64_t kStreamInit = 0x400000000ull;
constexpr uint64_t kStreamEval = 0x500000000ull;
constexpr uint64_t kStreamSplit = 0x600000000ull;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename Real>
struct Adam {
  std::vector<Real> m, v;
  int t = 0;

  // Clears the moments of one parameter slice (after an exact refit of that
  // slice, stale moments would drag it away again).
  void reset_range(size_t offset, size_t count) {
    if (m.empty()) return;
    std::fill(m.begin() + offset, m.begin() + offset + count, Real(0));
    std::fill(v.begin() + offset, v.begin() + offset + count, Real(0));
  }

  void step(std::vector<Real>& params, const std::vector<Real>& grad, double lr,
            double beta1, double beta2, double eps) {
    if (m.empty()) {
      m.assign(params.size(), Real(0));
      v.assign(params.size(), Real(0));
    }
    ++t;
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    const long long n = static_cast<long long>(params.size());
#pragma omp parallel for schedule(static, 8192)
    for (long long i = 0; i < n; ++i) {
      double g = static_cast<double>(grad[i]);
      double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * g;
      double vi = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * g * g;
      m[i] = static_cast<Real>(mi);
      v[i] = static_cast<Real>(vi);
      params[i] -= static_cast<Real>(lr * (mi / c1) / (std::sqrt(vi / c2) + eps));
    }
  }
};

// Jittered stratified grid batch for epoch `epoch`; uv in row-major cell
// order, one (u,v) jitter pair per cell.
template <typename Real>
void grid_batch(int grid_side, uint64_t seed, uint64_t epoch, std::vector<Real>& uv) {
  SplitMix64 stream = SplitMix64(seed).fork(kStreamGrid + epoch);
  const int g = grid_side;
  uv.resize(2 * static_cast<size_t>(g) * g);
#pragma omp parallel for schedule(static, 16)
  for (int j = 0; j < g; ++j) {
    for (int i = 0; i < g; ++i) {
      uint64_t cell = static_cast<uint64_t>(j) * g + i;
      uv[2 * cell] = static_cast<Real>((i + stream.uniform(2 * cell)) / g);
      uv[2 * cell + 1] = static_cast<Real>((j + stream.uniform(2 * cell + 1)) / g);
    }
  }
}

// Uniform samples on the edge of [0,1]^2.
template <typename Real>
void boundary_batch(int count, uint64_t seed, uint64_t epoch, std::vector<Real>& uv) {
  SplitMix64 stream = SplitMix64(seed).fork(kStreamBoundary + epoch);
  uv.resize(2 * static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    double t = stream.uniform(i) * 4.0;
    int side = std::min(static_cast<int>(t), 3);
    double f = t - side;
    double u, v;
    switch (side) {
      case 0: u = f; v = 0.0; break;
      case 1: u = 1.0; v = f; break;
      case 2: u = 1.0 - f; v = 1.0; break;
      default: u = 0.0; v = 1.0 - f; break;
    }
    uv[2 * i] = static_cast<Real>(u);
    uv[2 * i + 1] = static_cast<Real>(v);
  }
}

std::vector<Vec2> uv_as_vec2(const std::vector<float>& uv) {
  std::vector<Vec2> out(uv.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) out[i] = {uv[2 * i], uv[2 * i + 1]};
  return out;
}

// Fitted-surface triangulation on a (g+1)^2 corner grid.
template <typename Real>
TriMesh field_surface_mesh(const MlpField<Real>& field, int g) {
  const int n = (g + 1) * (g + 1);
  std::vector<Real> uv(2 * static_cast<size_t>(n));
  for (int j = 0; j <= g; ++j)
    for (int i = 0; i <= g; ++i) {
      int idx = j * (g + 1) + i;
      uv[2 * idx] = static_cast<Real>(static_cast<double>(i) / g);
      uv[2 * idx + 1] = static_cast<Real>(static_cast<double>(j) / g);
    }
  std::vector<Real> out(3 * static_cast<size_t>(n));
  field.forward(uv.data(), n, out.data());
  TriMesh mesh;
  mesh.vertices.resize(n);
  for (int i = 0; i < n; ++i)
    mesh.vertices[i] = {static_cast<double>(out[3 * i]), static_cast<double>(out[3 * i + 1]),
                        static_cast<double>(out[3 * i + 2])};
  auto vid = [&](int i, int j) { return j * (g + 1) + i; };
  for (int j = 0; j < g; ++j)
    for (int i = 0; i < g; ++i) {
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  return mesh;
}

}  // namespace

SquareEmbedding SquareEmbedding::canonical(double side) {
  SquareEmbedding e;
  e.plane.normal = {0, 0, 1};
  e.plane.tangent = {1, 0, 0};
  e.plane.bitangent = {0, 1, 0};
  e.plane.offset = 0.0;
  e.side = side;
  e.center = {0, 0, 0};
  return e;
}

ChamferResult chamfer_loss(const std::vector<Vec3>& P, const std::vector<Vec3>& Q) {
  if (P.empty() || Q.empty()) throw DataError("chamfer requires nonempty point sets");
  const int np = static_cast<int>(P.size()), nq = static_cast<int>(Q.size());

  std::vector<double> pf(3 * static_cast<size_t>(np)), qf(3 * static_cast<size_t>(nq));
  for (int i = 0; i < np; ++i) {
    pf[3 * i] = P[i].x;
    pf[3 * i + 1] = P[i].y;
    pf[3 * i + 2] = P[i].z;
  }
  for (int j = 0; j < nq; ++j) {
    qf[3 * j] = Q[j].x;
    qf[3 * j + 1] = Q[j].y;
    qf[3 * j + 2] = Q[j].z;
  }
  KdTree3<double> ptree, qtree;
  ptree.build(pf.data(), np);
  qtree.build(qf.data(), nq);

  ChamferResult res;
  res.grad_p.assign(np, Vec3{0, 0, 0});
  res.nearest_in_q.resize(np);
  res.nearest_in_p.resize(nq);
  std::vector<double> d2p(np), d2q(nq);
#pragma omp parallel for schedule(static, 256)
  for (int i = 0; i < np; ++i) {
    auto hit = qtree.nearest(pf[3 * i], pf[3 * i + 1], pf[3 * i + 2]);
    res.nearest_in_q[i] = hit.index;
    d2p[i] = hit.sq_dist;
  }
#pragma omp parallel for schedule(static, 256)
  for (int j = 0; j < nq; ++j) {
    auto hit = ptree.nearest(qf[3 * j], qf[3 * j + 1], qf[3 * j + 2]);
    res.nearest_in_p[j] = hit.index;
    d2q[j] = hit.sq_dist;
  }
  double l1 = 0.0, l2 = 0.0;
  for (int i = 0; i < np; ++i) l1 += d2p[i];
  for (int j = 0; j < nq; ++j) l2 += d2q[j];
  res.loss = l1 / np + l2 / nq;

  for (int i = 0; i < np; ++i)
    res.grad_p[i] += (P[i] - Q[res.nearest_in_q[i]]) * (2.0 / np);
  for (int j = 0; j < nq; ++j)
    res.grad_p[res.nearest_in_p[j]] += (P[res.nearest_in_p[j]] - Q[j]) * (2.0 / nq);
  return res;
}

template <typename Real>
double boundary_loss(const MlpField<Real>& field, const std::vector<Vec2>& boundary_uv,
                     const SquareEmbedding& embedding, std::vector<Real>* param_grad) {
  if (boundary_uv.empty()) throw DataError("boundary loss requires samples");
  const int n = static_cast<int>(boundary_uv.size());
  std::vector<Real> uv(2 * static_cast<size_t>(n)), out(3 * static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    uv[2 * i] = static_cast<Real>(boundary_uv[i].x);
    uv[2 * i + 1] = static_cast<Real>(boundary_uv[i].y);
  }
  typename MlpField<Real>::Workspace ws;
  field.forward(uv.data(), n, out.data(), param_grad ? &ws : nullptr);

  double loss = 0.0;
  std::vector<Real> dout(3 * static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vec3 target = embedding.proj({static_cast<double>(uv[2 * i]),
                                  static_cast<double>(uv[2 * i + 1])});
    for (int c = 0; c < 3; ++c) {
      double d = static_cast<double>(out[3 * i + c]) - target[c];
      loss += d * d;
      dout[3 * i + c] = static_cast<Real>(2.0 * d / n);
    }
  }
  loss /= n;
  if (param_grad) field.backward(ws, dout.data(), *param_grad);
  return loss;
}

template double boundary_loss<float>(const MlpField<float>&, const std::vector<Vec2>&,
                                     const SquareEmbedding&, std::vector<float>*);
template double boundary_loss<double>(const MlpField<double>&, const std::vector<Vec2>&,
                                      const SquareEmbedding&, std::vector<double>*);

namespace {

// Exact least-squares refit of the output layer against proj targets on the
// validation grid: ridge-regularized normal equations over the penultimate
// activations.
template <typename Real>
void polish_output_layer(MlpField<Real>& field, const SquareEmbedding& embedding,
                         const std::vector<Real>& uv, int n) {
  const int h = field.hidden_width();
  typename MlpField<Real>::Workspace ws;
  std::vector<Real> out(3 * static_cast<size_t>(n));
  field.forward(uv.data(), n, out.data(), &ws);
  const std::vector<Real>& feats = ws.activated[MlpField<Real>::kLayers - 2];  // act(z7)

  Eigen::MatrixXd X(n, h + 1);
  Eigen::MatrixXd Y(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < h; ++j) X(i, j) = static_cast<double>(feats[static_cast<size_t>(i) * h + j]);
    X(i, h) = 1.0;
    Vec3 target = embedding.proj({static_cast<double>(uv[2 * i]),
                                  static_cast<double>(uv[2 * i + 1])});
    Y(i, 0) = target.x;
    Y(i, 1) = target.y;
    Y(i, 2) = target.z;
  }
  Eigen::MatrixXd G = X.transpose() * X;
  G.diagonal().array() += 1e-9 * (G.trace() / (h + 1) + 1.0);
  Eigen::MatrixXd W = G.ldlt().solve(X.transpose() * Y);  // (h+1) x 3

  Real* w8 = field.params().data() + field.weight_offset(MlpField<Real>::kLayers);
  Real* b8 = field.params().data() + field.bias_offset(MlpField<Real>::kLayers);
  for (int j = 0; j < h; ++j)
    for (int c = 0; c < 3; ++c) w8[3 * j + c] = static_cast<Real>(W(j, c));
  for (int c = 0; c < 3; ++c) b8[c] = static_cast<Real>(W(h, c));
}

// Mean squared deviation from proj on a fixed pixel-center validation grid.
template <typename Real>
double validation_mse(const MlpField<Real>& field, const SquareEmbedding& embedding,
                      int g, std::vector<Real>& uv_scratch) {
  const int n = g * g;
  uv_scratch.resize(2 * static_cast<size_t>(n));
  for (int j = 0; j < g; ++j)
    for (int i = 0; i < g; ++i) {
      int idx = j * g + i;
      uv_scratch[2 * idx] = static_cast<Real>((i + 0.5) / g);
      uv_scratch[2 * idx + 1] = static_cast<Real>((j + 0.5) / g);
    }
  std::vector<Real> out(3 * static_cast<size_t>(n));
  field.forward(uv_scratch.data(), n, out.data());
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec3 target = embedding.proj({static_cast<double>(uv_scratch[2 * i]),
                                  static_cast<double>(uv_scratch[2 * i + 1])});
    for (int c = 0; c < 3; ++c) {
      double d = static_cast<double>(out[3 * i + c]) - target[c];
      loss += d * d;
    }
  }
  return loss / n;
}

}  // namespace

template <typename Real>
InitReport init_to_plane(MlpField<Real>& field, const SquareEmbedding& embedding,
                         const FitConfig& config) {
  field.check_finite();
  const double side2 = embedding.side * embedding.side;
  const double target = config.init_target_mse * side2;
  const int g = config.init_grid;
  const int n = g * g;

  Adam<Real> adam;
  typename MlpField<Real>::Workspace ws;
  std::vector<Real> uv, out(3 * static_cast<size_t>(n)), dout(3 * static_cast<size_t>(n));
  std::vector<Real> grad, val_scratch;
  InitReport report;

  // 64x64 pixel-center grid used for validation, the recorded trace, and the
  // output-layer polish.
  const int vg = 64;
  std::vector<Real> val_uv(2 * static_cast<size_t>(vg) * vg);
  for (int j = 0; j < vg; ++j)
    for (int i = 0; i < vg; ++i) {
      int idx = j * vg + i;
      val_uv[2 * idx] = static_cast<Real>((i + 0.5) / vg);
      val_uv[2 * idx + 1] = static_cast<Real>((j + 0.5) / vg);
    }

  for (int epoch = 0; epoch < config.init_epochs; ++epoch) {
    grid_batch(g, SplitMix64(config.seed).fork(kStreamInit).seed(), epoch, uv);
    field.forward(uv.data(), n, out.data(), &ws);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      Vec3 t = embedding.proj({static_cast<double>(uv[2 * i]),
                               static_cast<double>(uv[2 * i + 1])});
      for (int c = 0; c < 3; ++c) {
        double d = static_cast<double>(out[3 * i + c]) - t[c];
        loss += d * d;
        dout[3 * i + c] = static_cast<Real>(2.0 * d / n);
      }
    }
    loss /= n;
    if (!std::isfinite(loss))
      throw NumericError("non-finite init loss at epoch " + std::to_string(epoch));
    grad.assign(field.size(), Real(0));
    field.backward(ws, dout.data(), grad);
    adam.step(field.params(), grad, config.init_learning_rate, config.beta1, config.beta2,
              config.epsilon);
    report.epochs_run = epoch + 1;

    if (config.init_polish_interval > 0 && (epoch + 1) % config.init_polish_interval == 0) {
      polish_output_layer(field, embedding, val_uv, vg * vg);
      adam.reset_range(field.weight_offset(MlpField<Real>::kLayers),
                       field.size() - field.weight_offset(MlpField<Real>::kLayers));
    }
    report.final_mse = validation_mse(field, embedding, vg, val_scratch);
    report.loss_trace.push_back(report.final_mse / side2);
    if (report.final_mse < target) return report;
  }
  throw NumericError("plane initialization missed its target: final validation MSE " +
                     std::to_string(report.final_mse) + " vs required " +
                     std::to_string(target));
}

template InitReport init_to_plane<float>(MlpField<float>&, const SquareEmbedding&,
                                         const FitConfig&);
template InitReport init_to_plane<double>(MlpField<double>&, const SquareEmbedding&,
                                          const FitConfig&);

namespace {

struct TargetView {
  const TriMesh* mesh = nullptr;
  std::vector<Vec3> pool;          // training pool
  std::vector<Vec3> heldout;       // evaluation points
  std::vector<Vec3> full_points;   // bare-point targets: the full set
};

TargetView make_target_view(const OrientedPointSet& points, const FitConfig& config) {
  if (points.points.empty()) throw DataError("empty target point set");
  for (size_t i = 0; i < points.points.size(); ++i)
    if (!finite(points.points[i]))
      throw DataError("target point " + std::to_string(i) + " is not finite");
  TargetView view;
  view.full_points = points.points;
  const int n = points.size();
  const int eval_n = std::min(config.eval_points, n);
  // Deterministic permutation split: eval takes the first eval_n slots when
  // the pool is large enough to spare them.
  SplitMix64 rng = SplitMix64(config.seed).fork(kStreamSplit);
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform(n - 1 - i) * (i + 1));
    std::swap(perm[i], perm[std::min(j, i)]);
  }
  if (n >= 2 * config.eval_points) {
    for (int i = 0; i < eval_n; ++i) view.heldout.push_back(points.points[perm[i]]);
    for (int i = eval_n; i < n; ++i) view.pool.push_back(points.points[perm[i]]);
  } else {
    for (int i = 0; i < eval_n; ++i) view.heldout.push_back(points.points[perm[i]]);
    view.pool = points.points;
  }
  return view;
}

TargetView make_target_view(const TriMesh& mesh, const FitConfig& config) {
  TargetView view;
  view.mesh = &mesh;
  uint64_t pool_seed = SplitMix64(config.seed).fork(kStreamSplit).seed();
  uint64_t eval_seed = SplitMix64(config.seed).fork(kStreamEval).seed();
  view.pool = sample_surface(mesh, config.target_pool_samples, pool_seed).points;
  view.heldout = sample_surface(mesh, config.eval_points, eval_seed).points;
  return view;
}

double heldout_chamfer_view(const MlpField<float>& field, const SquareEmbedding& embedding,
                            const TargetView& view, const FitConfig& config) {
  // Direction A: held-out target points to the triangulated fitted surface.
  TriMesh surface = field_surface_mesh(field, config.eval_surface_grid);
  TriBvh bvh(surface);
  const int na = static_cast<int>(view.heldout.size());
  std::vector<double> d2a(na);
#pragma omp parallel for schedule(static, 256)
  for (int i = 0; i < na; ++i) d2a[i] = bvh.closest_point(view.heldout[i]).sq_dist;
  double mean_a = 0.0;
  for (int i = 0; i < na; ++i) mean_a += d2a[i];
  mean_a /= std::max(na, 1);

  // Direction B: fitted-surface samples to the target geometry.
  const int nb = config.eval_points;
  SplitMix64 stream = SplitMix64(config.seed).fork(kStreamEval + 1);
  std::vector<float> uv(2 * static_cast<size_t>(nb));
  for (int i = 0; i < nb; ++i) {
    uv[2 * i] = static_cast<float>(stream.uniform(2 * static_cast<uint64_t>(i)));
    uv[2 * i + 1] = static_cast<float>(stream.uniform(2 * static_cast<uint64_t>(i) + 1));
  }
  std::vector<float> out(3 * static_cast<size_t>(nb));
  field.forward(uv.data(), nb, out.data());
  std::vector<double> d2b(nb);
  if (view.mesh) {
    TriBvh target_bvh(*view.mesh);
#pragma omp parallel for schedule(static, 256)
    for (int i = 0; i < nb; ++i)
      d2b[i] = target_bvh.closest_point({out[3 * i], out[3 * i + 1], out[3 * i + 2]}).sq_dist;
  } else {
    std::vector<double> pts(3 * view.full_points.size());
    for (size_t i = 0; i < view.full_points.size(); ++i) {
      pts[3 * i] = view.full_points[i].x;
      pts[3 * i + 1] = view.full_points[i].y;
      pts[3 * i + 2] = view.full_points[i].z;
    }
    KdTree3<double> tree;
    tree.build(pts.data(), static_cast<int>(view.full_points.size()));
#pragma omp parallel for schedule(static, 256)
    for (int i = 0; i < nb; ++i)
      d2b[i] = tree.nearest(out[3 * i], out[3 * i + 1], out[3 * i + 2]).sq_dist;
  }
  double mean_b = 0.0;
  for (int i = 0; i < nb; ++i) mean_b += d2b[i];
  mean_b /= std::max(nb, 1);
  return mean_a + mean_b;
}

FitReport fit_impl(MlpField<float>& field, const TargetView& view,
                   const SquareEmbedding& embedding, const FitConfig& config) {
  if (config.grid_side < 2 || config.target_samples_per_step < 1 ||
      config.boundary_samples_per_step < 1 || config.learning_rate <= 0.0)
    throw DataError("invalid fit configuration");
  field.check_finite();
  const double t0 = now_seconds();

  const int ng = config.grid_side * config.grid_side;
  const int nb = config.boundary_samples_per_step;
  const int nq = config.target_samples_per_step;
  const int batch = ng + nb;
  const int pool_n = static_cast<int>(view.pool.size());

  MlpField<float>::Workspace ws;
  Adam<float> adam;
  std::vector<float> uv_grid, uv_boundary, uv(2 * static_cast<size_t>(batch));
  std::vector<float> out(3 * static_cast<size_t>(batch)), dout(3 * static_cast<size_t>(batch));
  std::vector<float> qsub(3 * static_cast<size_t>(nq));
  std::vector<float> grad;
  std::vector<double> d2p(ng), d2q(nq);
  std::vector<int> nn_q(ng), nn_p(nq);
  KdTree3<float> qtree, ptree;

  FitReport report;
  report.seed = config.seed;
  report.thread_cap = thread_cap();
  report.config_json = config.to_json();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    grid_batch(config.grid_side, config.seed, epoch, uv_grid);
    boundary_batch(nb, config.seed, epoch, uv_boundary);
    std::copy(uv_grid.begin(), uv_grid.end(), uv.begin());
    std::copy(uv_boundary.begin(), uv_boundary.end(), uv.begin() + uv_grid.size());

    field.forward(uv.data(), batch, out.data(), &ws);

    // Q: per-step subsample of the pool, drawn with replacement.
    SplitMix64 sub = SplitMix64(config.seed).fork(kStreamSubsample + epoch);
    for (int i = 0; i < nq; ++i) {
      int idx = std::min(static_cast<int>(sub.uniform(i) * pool_n), pool_n - 1);
      qsub[3 * i] = static_cast<float>(view.pool[idx].x);
      qsub[3 * i + 1] = static_cast<float>(view.pool[idx].y);
      qsub[3 * i + 2] = static_cast<float>(view.pool[idx].z);
    }
    qtree.build(qsub.data(), nq);
    ptree.build(out.data(), ng);  // deformed grid points only

#pragma omp parallel for schedule(static, 256)
    for (int i = 0; i < ng; ++i) {
      auto hit = qtree.nearest(out[3 * i], out[3 * i + 1], out[3 * i + 2]);
      nn_q[i] = hit.index;
      d2p[i] = hit.sq_dist;
    }
#pragma omp parallel for schedule(static, 256)
    for (int j = 0; j < nq; ++j) {
      auto hit = ptree.nearest(qsub[3 * j], qsub[3 * j + 1], qsub[3 * j + 2]);
      nn_p[j] = hit.index;
      d2q[j] = hit.sq_dist;
    }
    double chamfer = 0.0;
    for (int i = 0; i < ng; ++i) chamfer += d2p[i];
    chamfer /= ng;
    double l2 = 0.0;
    for (int j = 0; j < nq; ++j) l2 += d2q[j];
    chamfer += l2 / nq;

    std::fill(dout.begin(), dout.end(), 0.0f);
    const float wp = 2.0f / ng;
#pragma omp parallel for schedule(static, 256)
    for (int i = 0; i < ng; ++i) {
      const float* q = qsub.data() + 3 * nn_q[i];
      for (int c = 0; c < 3; ++c) dout[3 * i + c] = wp * (out[3 * i + c] - q[c]);
    }
    const float wq = 2.0f / nq;
    for (int j = 0; j < nq; ++j) {  // serial scatter keeps accumulation order fixed
      int i = nn_p[j];
      const float* q = qsub.data() + 3 * j;
      for (int c = 0; c < 3; ++c) dout[3 * i + c] += wq * (out[3 * i + c] - q[c]);
    }

    double bloss = 0.0;
    const float wb = static_cast<float>(2.0 * config.boundary_weight / nb);
    for (int i = 0; i < nb; ++i) {
      int row = ng + i;
      Vec3 target = embedding.proj({static_cast<double>(uv[2 * row]),
                                    static_cast<double>(uv[2 * row + 1])});
      for (int c = 0; c < 3; ++c) {
        double d = static_cast<double>(out[3 * row + c]) - target[c];
        bloss += d * d;
        dout[3 * row + c] = wb * static_cast<float>(d);
      }
    }
    bloss /= nb;

    double total = chamfer + config.boundary_weight * bloss;
    if (!std::isfinite(total))
      throw NumericError("non-finite loss at step " + std::to_string(epoch));
    report.loss_trace.push_back(total);
    report.chamfer_trace.push_back(chamfer);
    report.boundary_trace.push_back(bloss);

    grad.assign(field.size(), 0.0f);
    field.backward(ws, dout.data(), grad);
    adam.step(field.params(), grad, config.learning_rate, config.beta1, config.beta2,
              config.epsilon);
    report.epochs_run = epoch + 1;

    if (config.early_stop_chamfer > 0.0 && config.eval_interval > 0 &&
        (epoch + 1) % config.eval_interval == 0) {
      double heldout = heldout_chamfer_view(field, embedding, view, config);
      if (heldout < config.early_stop_chamfer) {
        report.final_chamfer = heldout;
        report.seconds = now_seconds() - t0;
        return report;
      }
    }
  }
  report.final_chamfer = heldout_chamfer_view(field, embedding, view, config);
  report.seconds = now_seconds() - t0;
  return report;
}

}  // namespace

FitReport fit(MlpField<float>& field, const OrientedPointSet& target,
              const SquareEmbedding& embedding, const FitConfig& config) {
  return fit_impl(field, make_target_view(target, config), embedding, config);
}

FitReport fit(MlpField<float>& field, const TriMesh& target,
              const SquareEmbedding& embedding, const FitConfig& config) {
  if (target.triangles.empty()) throw DataError("empty target mesh");
  return fit_impl(field, make_target_view(target, config), embedding, config);
}

double heldout_chamfer(const MlpField<float>& field, const SquareEmbedding& embedding,
                       const std::vector<Vec3>& heldout_points, const TriMesh* target_mesh,
                       const std::vector<Vec3>* target_points, const FitConfig& config) {
  TargetView view;
  view.mesh = target_mesh;
  view.heldout = heldout_points;
  if (target_points) view.full_points = *target_points;
  if (!target_mesh && view.full_points.empty())
    throw DataError("held-out evaluation needs a target mesh or point set");
  return heldout_chamfer_view(field, embedding, view, config);
}

namespace {

template <typename Real>
VdmImage extract_vdm_impl(const MlpField<Real>& field, const SquareEmbedding& embedding,
                          int resolution) {
  VdmImage vdm = make_vdm(resolution);
  const int R = resolution;
  constexpr int kChunkRows = 16;
  std::vector<Real> uv(2 * static_cast<size_t>(kChunkRows) * R);
  std::vector<Real> out(3 * static_cast<size_t>(kChunkRows) * R);
  for (int j0 = 0; j0 < R; j0 += kChunkRows) {
    const int rows = std::min(kChunkRows, R - j0);
    const int n = rows * R;
    for (int j = 0; j < rows; ++j)
      for (int i = 0; i < R; ++i) {
        int idx = j * R + i;
        uv[2 * idx] = static_cast<Real>((i + 0.5) / R);
        uv[2 * idx + 1] = static_cast<Real>((j0 + j + 0.5) / R);
      }
    field.forward(uv.data(), n, out.data());
    for (int j = 0; j < rows; ++j)
      for (int i = 0; i < R; ++i) {
        int idx = j * R + i;
        Vec3 p{static_cast<double>(out[3 * idx]), static_cast<double>(out[3 * idx + 1]),
               static_cast<double>(out[3 * idx + 2])};
        Vec3 base = embedding.proj({static_cast<double>(uv[2 * idx]),
                                    static_cast<double>(uv[2 * idx + 1])});
        Vec3 d = p - base;
        float* px = vdm.pixel(i, j0 + j);
        px[0] = static_cast<float>(dot(d, embedding.plane.tangent) / embedding.side);
        px[1] = static_cast<float>(dot(d, embedding.plane.bitangent) / embedding.side);
        px[2] = static_cast<float>(dot(d, embedding.plane.normal) / embedding.side);
        if (!std::isfinite(px[0]) || !std::isfinite(px[1]) || !std::isfinite(px[2]))
          throw NumericError("non-finite VDM value at pixel (" + std::to_string(i) + "," +
                             std::to_string(j0 + j) + ")");
      }
  }
  return vdm;
}

}  // namespace

VdmImage extract_vdm(const MlpField<float>& field, const SquareEmbedding& embedding,
                     int resolution) {
  return extract_vdm_impl(field, embedding, resolution);
}

VdmImage extract_vdm(const MlpField<double>& field, const SquareEmbedding& embedding,
                     int resolution) {
  return extract_vdm_impl(field, embedding, resolution);
}

std::string FitConfig::to_json() const {
  nlohmann::json j;
  j["learning_rate"] = learning_rate;
  j["epochs"] = epochs;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["epsilon"] = epsilon;
  j["grid_side"] = grid_side;
  j["target_samples_per_step"] = target_samples_per_step;
  j["boundary_samples_per_step"] = boundary_samples_per_step;
  j["boundary_weight"] = boundary_weight;
  j["seed"] = seed;
  j["eval_points"] = eval_points;
  j["eval_surface_grid"] = eval_surface_grid;
  j["target_pool_samples"] = target_pool_samples;
  j["early_stop_chamfer"] = early_stop_chamfer;
  j["eval_interval"] = eval_interval;
  j["init_epochs"] = init_epochs;
  j["init_grid"] = init_grid;
  j["init_learning_rate"] = init_learning_rate;
  j["init_target_mse"] = init_target_mse;
  j["init_polish_interval"] = init_polish_interval;
  return j.dump();
}

std::string FitReport::to_json() const {
  nlohmann::json j;
  j["loss_trace"] = loss_trace;
  j["chamfer_trace"] = chamfer_trace;
  j["boundary_trace"] = boundary_trace;
  j["epochs_run"] = epochs_run;
  j["final_chamfer"] = final_chamfer;
  j["seconds"] = seconds;
  j["seed"] = seed;
  j["thread_cap"] = thread_cap;
  j["config"] = nlohmann::json::parse(config_json.empty() ? "{}" : config_json);
  return j.dump(2);
}

}  // namespace vdmforge
