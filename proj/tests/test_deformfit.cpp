#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "vdmforge/errors.hpp"
#include "vdmforge/fit.hpp"
#include "vdmforge/reference.hpp"
#include "vdmforge/sampling.hpp"
#include "vdmforge/vdm_image.hpp"

using namespace vdmforge;

namespace {

// Width-4 double field that computes exactly proj(u,v) = (u-1/2, v-1/2, 0)
// for the canonical embedding: all hidden units stay positive (LeakyReLU is
// the identity there) and every weight is dyadic, so the arithmetic is exact.
MlpField<double> exact_identity_field(const Vec3& output_offset = {0, 0, 0}) {
  MlpField<double> f(4);
  auto W = [&](int layer) { return f.params().data() + f.weight_offset(layer); };
  auto B = [&](int layer) { return f.params().data() + f.bias_offset(layer); };
  // Layer 1: h1 = (u+2, v+2, 2, 2): positive for (u,v) in [0,1]^2.
  W(1)[0 * 4 + 0] = 1.0;  // u -> h1[0]
  W(1)[1 * 4 + 1] = 1.0;  // v -> h1[1]
  for (int j = 0; j < 4; ++j) B(1)[j] = 2.0;
  // Layers 2..7: identity pass-through (positive inputs stay positive).
  for (int layer = 2; layer <= 7; ++layer)
    for (int j = 0; j < 4; ++j) W(layer)[j * 4 + j] = 1.0;
  // The layer-4 skip doubles the signal: h4 = h3 + h3 = 2 h3. Compensate by
  // halving at layer 5.
  for (int j = 0; j < 4; ++j) W(5)[j * 4 + j] = 0.5;
  // Output: x = h7[0] - h7[2] + (2 - 2) ... assemble (u+2) - 2 - 0.5 etc.
  // h7 = (u+2, v+2, 2, 2). out = (h7[0] - h7[2] - 0.5, h7[1] - h7[3] - 0.5, 0).
  W(8)[0 * 3 + 0] = 1.0;   // h7[0] -> x
  W(8)[2 * 3 + 0] = -1.0;  // h7[2] -> x
  W(8)[1 * 3 + 1] = 1.0;   // h7[1] -> y
  W(8)[3 * 3 + 1] = -1.0;  // h7[3] -> y
  B(8)[0] = -0.5 + output_offset.x;
  B(8)[1] = -0.5 + output_offset.y;
  B(8)[2] = output_offset.z;
  return f;
}

template <typename Real>
std::vector<Real> flat_uv(const std::vector<Vec2>& uv) {
  std::vector<Real> out(2 * uv.size());
  for (size_t i = 0; i < uv.size(); ++i) {
    out[2 * i] = static_cast<Real>(uv[i].x);
    out[2 * i + 1] = static_cast<Real>(uv[i].y);
  }
  return out;
}

// A finite-difference stencil is only a valid derivative oracle when the
// perturbation does not push any pre-activation across the LeakyReLU kink;
// compare cached activation signs at theta +- h.
bool probe_crosses_kink(const MlpField<double>& field, size_t param, double h,
                        const std::vector<double>& flat, int n) {
  auto signs = [&](double delta) {
    MlpField<double> g = field;
    g.params()[param] += delta;
    MlpField<double>::Workspace ws;
    std::vector<double> out(3 * n);
    g.forward(flat.data(), n, out.data(), &ws);
    std::vector<char> s;
    for (int l = 0; l < MlpField<double>::kLayers - 1; ++l)
      for (double a : ws.activated[l]) s.push_back(a > 0.0 ? 1 : 0);
    return s;
  };
  return signs(h) != signs(-h);
}

}  // namespace

TEST_CASE("field: parameter count matches the architectural formula") {
  CHECK(MlpField<double>::parameter_count(512) == 1579011);
  MlpField<double> f(512);
  CHECK(f.size() == 1579011);
  MlpField<double> g(16);
  CHECK(g.size() == 6 * 16 * 16 + 12 * 16 + 3);
}

TEST_CASE("field: zero parameters give zero output") {
  MlpField<double> f(16);
  std::vector<double> uv = {0.3, 0.7, 0.9, 0.1};
  std::vector<double> out(6, 99.0);
  f.forward(uv.data(), 2, out.data());
  for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("field: batched forward equals per-point forward exactly") {
  MlpField<float> f(32);
  f.randomize(3);
  std::vector<Vec2> uv;
  SplitMix64 rng(4);
  for (int i = 0; i < 37; ++i) uv.push_back({rng.next_uniform(), rng.next_uniform()});
  auto flat = flat_uv<float>(uv);
  std::vector<float> batch_out(3 * uv.size());
  f.forward(flat.data(), static_cast<int>(uv.size()), batch_out.data());
  for (size_t i = 0; i < uv.size(); ++i) {
    float single[3];
    float one[2] = {flat[2 * i], flat[2 * i + 1]};
    f.forward(one, 1, single);
    CHECK(batch_out[3 * i] == single[0]);
    CHECK(batch_out[3 * i + 1] == single[1]);
    CHECK(batch_out[3 * i + 2] == single[2]);
  }
}

TEST_CASE("field: forward matches the straight-line reference") {
  MlpField<double> f(24);
  f.randomize(7);
  std::vector<Vec2> uv;
  SplitMix64 rng(8);
  for (int i = 0; i < 50; ++i) uv.push_back({rng.next_uniform(), rng.next_uniform()});
  auto flat = flat_uv<double>(uv);
  std::vector<double> out(3 * uv.size());
  f.forward(flat.data(), static_cast<int>(uv.size()), out.data());
  auto oracle = reference::mlp_forward_reference(f, uv);
  for (size_t i = 0; i < uv.size(); ++i) {
    Vec3 got{out[3 * i], out[3 * i + 1], out[3 * i + 2]};
    double rel = norm(got - oracle[i]) / std::max(norm(oracle[i]), 1e-12);
    CHECK(rel < 1e-6);
  }
}

TEST_CASE("field: zero output gradient gives zero parameter gradient") {
  MlpField<double> f(16);
  f.randomize(11);
  std::vector<double> uv = {0.2, 0.4, 0.6, 0.8};
  std::vector<double> out(6);
  MlpField<double>::Workspace ws;
  f.forward(uv.data(), 2, out.data(), &ws);
  std::vector<double> dout(6, 0.0), grad;
  f.backward(ws, dout.data(), grad);
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("field: analytic gradient matches central finite differences") {
  MlpField<double> f(16);
  f.randomize(13);
  std::vector<Vec2> uv;
  std::vector<double> dout;
  SplitMix64 rng(14);
  for (int i = 0; i < 12; ++i) {
    uv.push_back({rng.next_uniform(), rng.next_uniform()});
    for (int c = 0; c < 3; ++c) dout.push_back(rng.next_uniform() - 0.5);
  }
  auto flat = flat_uv<double>(uv);
  const int n = static_cast<int>(uv.size());

  std::vector<double> out(3 * n);
  MlpField<double>::Workspace ws;
  f.forward(flat.data(), n, out.data(), &ws);
  std::vector<double> grad;
  f.backward(ws, dout.data(), grad);

  auto loss_at = [&](const std::vector<double>& params) {
    MlpField<double> g(16);
    g.params() = params;
    std::vector<double> o(3 * n);
    g.forward(flat.data(), n, o.data());
    double loss = 0.0;
    for (int i = 0; i < 3 * n; ++i) loss += o[i] * dout[i];
    return loss;
  };

  const double h = 1e-4;
  SplitMix64 pick(15);
  int probes = 0;
  while (probes < 100) {
    size_t p = pick.next() % f.size();
    if (probe_crosses_kink(f, p, h, flat, n)) continue;  // subgradient boundary
    ++probes;
    std::vector<double> plus = f.params(), minus = f.params();
    plus[p] += h;
    minus[p] -= h;
    double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
    double rel = std::abs(fd - grad[p]) / std::max({std::abs(fd), std::abs(grad[p]), 1e-10});
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("field: batch gradient is the exact sum of per-sample gradients") {
  // Power-of-two positive weights keep every product single-bit and every
  // intermediate sum well inside the double mantissa, so the equality is
  // bitwise regardless of accumulation grouping.
  MlpField<double> f(8);
  SplitMix64 rng(21);
  for (auto& p : f.params()) p = std::ldexp(1.0, -4 - static_cast<int>(rng.next() % 3));
  std::vector<Vec2> uv = {{0.25, 0.5}, {0.75, 0.125}, {0.5, 1.0}, {0.0625, 0.25}};
  std::vector<double> dout;
  for (size_t i = 0; i < 3 * uv.size(); ++i)
    dout.push_back(std::ldexp(1.0, -static_cast<int>(rng.next() % 4)));
  auto flat = flat_uv<double>(uv);

  MlpField<double>::Workspace ws;
  std::vector<double> out(3 * uv.size());
  f.forward(flat.data(), static_cast<int>(uv.size()), out.data(), &ws);
  std::vector<double> batch_grad;
  f.backward(ws, dout.data(), batch_grad);

  std::vector<double> sum_grad(f.size(), 0.0);
  for (size_t i = 0; i < uv.size(); ++i) {
    MlpField<double>::Workspace wsi;
    double o[3];
    f.forward(flat.data() + 2 * i, 1, o, &wsi);
    std::vector<double> gi;
    f.backward(wsi, dout.data() + 3 * i, gi);
    for (size_t p = 0; p < gi.size(); ++p) sum_grad[p] += gi[p];
  }
  for (size_t p = 0; p < f.size(); ++p) CHECK(batch_grad[p] == sum_grad[p]);
}

TEST_CASE("chamfer: identical sets give zero loss and gradient") {
  auto P = fixtures::random_points(31, 40);
  ChamferResult r = chamfer_loss(P, P);
  CHECK(r.loss == 0.0);
  for (const auto& g : r.grad_p) CHECK(norm(g) == 0.0);
}

TEST_CASE("chamfer: two-point hand computation") {
  ChamferResult r = chamfer_loss({{0, 0, 0}}, {{1, 0, 0}});
  CHECK(r.loss == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(r.grad_p[0].x == doctest::Approx(-4.0));  // 2(p-q)/1 twice
}

TEST_CASE("chamfer: equals the brute-force oracle exactly") {
  for (uint64_t seed = 0; seed < 8; ++seed) {
    auto P = fixtures::random_points(100 + seed, 50);
    auto Q = fixtures::random_points(200 + seed, 50);
    ChamferResult fast = chamfer_loss(P, Q);
    reference::BruteChamfer brute = reference::chamfer_bruteforce(P, Q);
    CHECK(fast.loss == brute.loss);
    CHECK(fast.nearest_in_q == brute.nearest_in_q);
    CHECK(fast.nearest_in_p == brute.nearest_in_p);
  }
}

TEST_CASE("chamfer: symmetry and translation invariance") {
  auto P = fixtures::random_points(41, 30);
  auto Q = fixtures::random_points(42, 45);
  CHECK(chamfer_loss(P, Q).loss == doctest::Approx(chamfer_loss(Q, P).loss).epsilon(1e-15));

  Vec3 t{10.5, -3.25, 0.75};
  std::vector<Vec3> Pt, Qt;
  for (const auto& p : P) Pt.push_back(p + t);
  for (const auto& q : Q) Qt.push_back(q + t);
  CHECK(std::abs(chamfer_loss(Pt, Qt).loss - chamfer_loss(P, Q).loss) < 1e-9);
}

TEST_CASE("chamfer: zero iff equal as multisets") {
  auto P = fixtures::random_points(51, 20);
  auto Q = P;
  std::swap(Q[3], Q[17]);  // same multiset, different order
  CHECK(chamfer_loss(P, Q).loss == 0.0);
  Q[5].x += 1e-3;
  CHECK(chamfer_loss(P, Q).loss > 0.0);
}

TEST_CASE("boundary_loss: exact-identity field scores zero") {
  MlpField<double> f = exact_identity_field();
  SquareEmbedding emb = SquareEmbedding::canonical(1.0);
  std::vector<Vec2> samples = {{0, 0}, {0.5, 0}, {1, 0}, {1, 0.5}, {1, 1}, {0, 0.25}};
  CHECK(boundary_loss(f, samples, emb) == 0.0);
}

TEST_CASE("boundary_loss: constant offset field scores the squared offset") {
  Vec3 c{0.25, -0.125, 0.5};
  MlpField<double> f = exact_identity_field(c);
  SquareEmbedding emb = SquareEmbedding::canonical(1.0);
  std::vector<Vec2> samples = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0}, {0, 0.5}};
  CHECK(boundary_loss(f, samples, emb) == doctest::Approx(norm2(c)).epsilon(1e-15));
}

TEST_CASE("boundary_loss: matches direct recomputation from forward outputs") {
  MlpField<double> f(16);
  f.randomize(61);
  SquareEmbedding emb = SquareEmbedding::canonical(2.0);
  emb.center = {0.5, -1.0, 0.25};
  std::vector<Vec2> samples;
  SplitMix64 rng(62);
  for (int i = 0; i < 64; ++i) {
    double t = rng.next_uniform() * 4.0;
    int side = std::min(static_cast<int>(t), 3);
    double fr = t - side;
    samples.push_back(side == 0   ? Vec2{fr, 0}
                      : side == 1 ? Vec2{1, fr}
                      : side == 2 ? Vec2{1 - fr, 1}
                                  : Vec2{0, 1 - fr});
  }
  double loss = boundary_loss(f, samples, emb);

  auto flat = flat_uv<double>(samples);
  std::vector<double> out(3 * samples.size());
  f.forward(flat.data(), static_cast<int>(samples.size()), out.data());
  double recomputed = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    Vec3 diff = Vec3{out[3 * i], out[3 * i + 1], out[3 * i + 2]} - emb.proj(samples[i]);
    recomputed += norm2(diff);
  }
  recomputed /= static_cast<double>(samples.size());
  CHECK(loss == doctest::Approx(recomputed).epsilon(1e-9));
}

TEST_CASE("boundary_loss: gradient matches finite differences") {
  MlpField<double> f(16);
  f.randomize(71);
  SquareEmbedding emb = SquareEmbedding::canonical(1.5);
  std::vector<Vec2> samples = {{0, 0}, {0.5, 0}, {1, 0.5}, {0.25, 1}, {0, 0.75}};
  std::vector<double> grad(f.size(), 0.0);
  boundary_loss(f, samples, emb, &grad);

  const double h = 1e-5;
  SplitMix64 pick(72);
  auto flat = flat_uv<double>(samples);
  int probes = 0;
  while (probes < 40) {
    size_t p = pick.next() % f.size();
    if (probe_crosses_kink(f, p, h, flat, static_cast<int>(samples.size()))) continue;
    ++probes;
    MlpField<double> plus = f, minus = f;
    plus.params()[p] += h;
    minus.params()[p] -= h;
    double fd = (boundary_loss(plus, samples, emb) - boundary_loss(minus, samples, emb)) /
                (2.0 * h);
    CHECK(std::abs(fd - grad[p]) / std::max({std::abs(fd), std::abs(grad[p]), 1e-10}) < 1e-4);
  }
}

TEST_CASE("extract_vdm: constant offset field stores the offset exactly") {
  Vec3 c{0.25, -0.125, 0.5};
  MlpField<double> f = exact_identity_field(c);
  SquareEmbedding emb = SquareEmbedding::canonical(1.0);
  VdmImage vdm = extract_vdm(f, emb, 32);
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < 32; ++i) {
      CHECK(vdm.pixel(i, j)[0] == doctest::Approx(c.x).epsilon(1e-12));
      CHECK(vdm.pixel(i, j)[1] == doctest::Approx(c.y).epsilon(1e-12));
      CHECK(vdm.pixel(i, j)[2] == doctest::Approx(c.z).epsilon(1e-12));
    }
}

TEST_CASE("extract_vdm then apply_to_plane reproduces forward positions") {
  MlpField<float> f(32);
  f.randomize(81);
  // Keep outputs near the tile so the displacement scale is sane.
  for (auto& p : f.params()) p *= 0.05f;
  SquareEmbedding emb = SquareEmbedding::canonical(1.0);
  const int R = 64;
  VdmImage vdm = extract_vdm(f, emb, R);
  TriMesh plane = apply_to_plane(vdm, R);

  std::vector<float> uv(2 * R * R), out(3 * R * R);
  for (int j = 0; j < R; ++j)
    for (int i = 0; i < R; ++i) {
      uv[2 * (j * R + i)] = static_cast<float>((i + 0.5) / R);
      uv[2 * (j * R + i) + 1] = static_cast<float>((j + 0.5) / R);
    }
  f.forward(uv.data(), R * R, out.data());
  // Canonical embedding: plane vertex = (u,v,0) + displacement; forward gives
  // the absolute position with proj = (u-0.5, v-0.5, 0), so shift by +0.5.
  double max_delta = 0.0;
  for (int idx = 0; idx < R * R; ++idx) {
    Vec3 expected{out[3 * idx] + 0.5, out[3 * idx + 1] + 0.5, out[3 * idx + 2]};
    max_delta = std::max(max_delta, norm(plane.vertices[idx] - expected));
  }
  CHECK(max_delta < 1e-6);
}

TEST_CASE("init_to_plane: reaches the validation threshold with sane outputs") {
  MlpField<float> f(64);
  f.randomize(91);
  SquareEmbedding emb = SquareEmbedding::canonical(2.0);
  FitConfig config;
  config.seed = 91;
  config.init_epochs = 600;
  config.init_grid = 24;
  InitReport report = init_to_plane(f, emb, config);
  CHECK(report.final_mse < 1e-5 * emb.side * emb.side);

  // Corners land near the square corners.
  std::vector<float> uv = {0, 0, 1, 0, 1, 1, 0, 1};
  std::vector<float> out(12);
  f.forward(uv.data(), 4, out.data());
  for (int k = 0; k < 4; ++k) {
    Vec3 corner = emb.proj({uv[2 * k], uv[2 * k + 1]});
    Vec3 got{out[3 * k], out[3 * k + 1], out[3 * k + 2]};
    CHECK(norm(got - corner) < 1e-2 * emb.side);
  }

  // Displacements are near zero after initialization.
  VdmImage vdm = extract_vdm(f, emb, 32);
  float max_pix = 0.0f;
  for (float v : vdm.data) max_pix = std::max(max_pix, std::abs(v));
  CHECK(max_pix < 1e-2);

  // Loss trace is non-increasing under a 10-epoch moving average.
  const auto& trace = report.loss_trace;
  REQUIRE(trace.size() >= 11);
  for (size_t k = 0; k + 10 < trace.size(); ++k) {
    double ma0 = 0.0, ma1 = 0.0;
    for (int i = 0; i < 10; ++i) {
      ma0 += trace[k + i];
      ma1 += trace[k + i + 1];
    }
    CHECK(ma1 <= ma0 * (1.0 + 1e-9));
  }
}

TEST_CASE("fit: equal seeds give identical traces and identical VDMs") {
  SquareEmbedding emb = SquareEmbedding::canonical(1.0);
  OrientedPointSet target;
  SplitMix64 rng(101);
  for (int i = 0; i < 20000; ++i) {
    double u = rng.next_uniform(), v = rng.next_uniform();
    Vec3 p = emb.proj({u, v});
    p.z += 0.1 * std::sin(6.28 * u) * std::sin(6.28 * v);
    target.points.push_back(p);
    target.normals.push_back({0, 0, 1});
  }

  FitConfig config;
  config.seed = 7;
  config.epochs = 25;
  config.grid_side = 12;
  config.target_samples_per_step = 512;
  config.boundary_samples_per_step = 64;
  config.eval_points = 5000;
  config.eval_surface_grid = 64;
  config.init_epochs = 400;
  config.init_grid = 12;

  auto run = [&]() {
    MlpField<float> f(64);
    f.randomize(config.seed);
    init_to_plane(f, emb, config);
    FitReport report = fit(f, target, emb, config);
    return std::pair<FitReport, VdmImage>(report, extract_vdm(f, emb, 32));
  };
  auto [r1, v1] = run();
  auto [r2, v2] = run();
  REQUIRE(r1.loss_trace.size() == r2.loss_trace.size());
  for (size_t i = 0; i < r1.loss_trace.size(); ++i)
    CHECK(r1.loss_trace[i] == r2.loss_trace[i]);
  CHECK(v1.data == v2.data);
  CHECK(r1.final_chamfer == r2.final_chamfer);
}

TEST_CASE("fit: non-finite inputs are rejected and divergence reports the step") {
  SquareEmbedding emb = SquareEmbedding::canonical(1.0);
  FitConfig config;
  config.epochs = 3;
  config.grid_side = 4;
  config.target_samples_per_step = 16;
  config.boundary_samples_per_step = 8;

  OrientedPointSet nan_target;
  for (int i = 0; i < 100; ++i) {
    nan_target.points.push_back({std::numeric_limits<double>::quiet_NaN(), 0, 0});
    nan_target.normals.push_back({0, 0, 1});
  }
  MlpField<float> f(16);
  f.randomize(1);
  CHECK_THROWS_AS(fit(f, nan_target, emb, config), DataError);

  // A target beyond float range overflows the squared distances.
  OrientedPointSet huge_target;
  for (int i = 0; i < 100; ++i) {
    huge_target.points.push_back({1e200, i * 1e190, 0});
    huge_target.normals.push_back({0, 0, 1});
  }
  CHECK_THROWS_WITH_AS(fit(f, huge_target, emb, config), doctest::Contains("step"),
                       NumericError);
}
