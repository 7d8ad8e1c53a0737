#include "vdmforge/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "vdmforge/errors.hpp"
#include "vdmforge/gemm.hpp"
#include "vdmforge/rng.hpp"

namespace vdmforge {

namespace {

template <typename Real>
void add_bias(Real* x, const Real* bias, int batch, int n) {
#pragma omp parallel for schedule(static, 64)
  for (int i = 0; i < batch; ++i) {
    Real* row = x + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) row[j] += bias[j];
  }
}

template <typename Real>
void leaky_relu(Real* x, size_t count, Real slope) {
#pragma omp parallel for schedule(static, 4096)
  for (long long i = 0; i < static_cast<long long>(count); ++i)
    x[i] = x[i] > Real(0) ? x[i] : slope * x[i];
}

// dz = dh * act'(z), with act(z) recoverable from the stored activation
// (sign(act(z)) == sign(z) for the leaky slope).
template <typename Real>
void leaky_relu_backward(const Real* activated, Real* dh, size_t count, Real slope) {
#pragma omp parallel for schedule(static, 4096)
  for (long long i = 0; i < static_cast<long long>(count); ++i)
    if (!(activated[i] > Real(0))) dh[i] *= slope;
}

template <typename Real>
void add_into(Real* dst, const Real* src, size_t count) {
#pragma omp parallel for schedule(static, 4096)
  for (long long i = 0; i < static_cast<long long>(count); ++i) dst[i] += src[i];
}

}  // namespace

template <typename Real>
MlpField<Real>::MlpField(int hidden_width) : hidden_(hidden_width) {
  if (hidden_ < 4) throw DataError("hidden width must be >= 4");
  offsets_.resize(kLayers + 1);
  size_t off = 0;
  for (int l = 1; l <= kLayers; ++l) {
    offsets_[l - 1] = off;
    off += static_cast<size_t>(layer_in(l)) * layer_out(l) + layer_out(l);
  }
  offsets_[kLayers] = off;
  params_.assign(off, Real(0));
  if (off != parameter_count(hidden_))
    throw NumericError("parameter layout does not match the architectural count");
}

template <typename Real>
void MlpField<Real>::randomize(uint64_t seed) {
  SplitMix64 rng(seed);
  uint64_t pos = 0;
  for (int l = 1; l <= kLayers; ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer_in(l)));
    size_t count = static_cast<size_t>(layer_in(l)) * layer_out(l) + layer_out(l);
    Real* p = params_.data() + weight_offset(l);
    for (size_t i = 0; i < count; ++i)
      p[i] = static_cast<Real>((2.0 * rng.uniform(pos++) - 1.0) * scale);
  }
}

template <typename Real>
void MlpField<Real>::check_finite() const {
  for (size_t i = 0; i < params_.size(); ++i)
    if (!std::isfinite(static_cast<double>(params_[i])))
      throw NumericError("non-finite network parameter at index " + std::to_string(i));
}

template <typename Real>
void MlpField<Real>::forward(const Real* uv, int batch, Real* out, Workspace* ws) const {
  // Uncached evaluation of large batches runs in fixed 8192-row chunks; the
  // per-row math is identical, so chunking never changes results.
  constexpr int kChunk = 8192;
  if (!ws && batch > kChunk) {
    Workspace local;
    for (int row0 = 0; row0 < batch; row0 += kChunk) {
      int rows = std::min(kChunk, batch - row0);
      forward_chunk(uv + static_cast<size_t>(row0) * 2, rows,
                    out + static_cast<size_t>(row0) * 3, local, false);
    }
    return;
  }
  Workspace local;
  Workspace& w = ws ? *ws : local;
  forward_chunk(uv, batch, out, w, ws != nullptr);
}

template <typename Real>
void MlpField<Real>::forward_chunk(const Real* uv, int batch, Real* out, Workspace& w,
                                   bool cache) const {
  w.batch = batch;
  const size_t bh = static_cast<size_t>(batch) * hidden_;
  w.scratch_a.resize(bh);
  w.scratch_b.resize(bh);
  if (cache) {
    w.input.assign(uv, uv + static_cast<size_t>(batch) * 2);
    for (int l = 1; l < kLayers; ++l)
      w.activated[l - 1].resize(static_cast<size_t>(batch) * layer_out(l));
  }

  // h holds the current layer input, z the pre-activation being built.
  Real* h = w.scratch_a.data();
  Real* z = w.scratch_b.data();
  const Real* cur = uv;
  for (int l = 1; l < kLayers; ++l) {
    gemm(cur, params_.data() + weight_offset(l), z, batch, layer_in(l), layer_out(l));
    add_bias(z, params_.data() + bias_offset(l), batch, layer_out(l));
    leaky_relu(z, static_cast<size_t>(batch) * layer_out(l), kLeakySlope);
    if (cache) std::memcpy(w.activated[l - 1].data(), z, sizeof(Real) * bh);
    if (l == kResidualLayer) add_into(z, cur, bh);
    std::swap(h, z);
    cur = h;
  }
  gemm(cur, params_.data() + weight_offset(kLayers), out, batch, hidden_, 3);
  add_bias(out, params_.data() + bias_offset(kLayers), batch, 3);
}

template <typename Real>
void MlpField<Real>::backward(Workspace& ws, const Real* out_grad,
                              std::vector<Real>& param_grad) const {
  const int batch = ws.batch;
  if (batch <= 0) throw DataError("backward without a cached forward");
  param_grad.resize(params_.size());
  const size_t bh = static_cast<size_t>(batch) * hidden_;
  ws.wt.resize(static_cast<size_t>(hidden_) * hidden_);

  // Layer inputs h_{l-1}: h_0 is the uv batch; h_l = act_l (+ h_3 skip at l=4).
  std::vector<Real> h4;  // materialized residual output when needed
  auto layer_input = [&](int l) -> const Real* {
    if (l == 1) return ws.input.data();
    if (l == kResidualLayer + 1) {
      h4.assign(ws.activated[kResidualLayer - 1].begin(),
                ws.activated[kResidualLayer - 1].end());
      add_into(h4.data(), ws.activated[kResidualLayer - 2].data(), bh);
      return h4.data();
    }
    return ws.activated[l - 2].data();
  };

  std::vector<Real> dh(bh), dz;
  // Output layer.
  gemm_at_b(layer_input(kLayers), out_grad, param_grad.data() + weight_offset(kLayers),
            batch, hidden_, 3, true);
  column_sums(out_grad, param_grad.data() + bias_offset(kLayers), batch, 3, true);
  transpose(params_.data() + weight_offset(kLayers), ws.wt.data(), hidden_, 3);
  gemm(out_grad, ws.wt.data(), dh.data(), batch, 3, hidden_);

  for (int l = kLayers - 1; l >= 1; --l) {
    // dh currently holds dL/dh_l; convert to dL/dz_l in place.
    std::vector<Real>& skip_grad = dz;  // reuse storage
    if (l == kResidualLayer) {
      // The skip contributes dh_4 directly to dh_3.
      skip_grad.assign(dh.begin(), dh.end());
    }
    leaky_relu_backward(ws.activated[l - 1].data(), dh.data(),
                        static_cast<size_t>(batch) * layer_out(l), kLeakySlope);
    gemm_at_b(layer_input(l), dh.data(), param_grad.data() + weight_offset(l), batch,
              layer_in(l), layer_out(l), true);
    column_sums(dh.data(), param_grad.data() + bias_offset(l), batch, layer_out(l), true);
    if (l > 1) {
      transpose(params_.data() + weight_offset(l), ws.wt.data(), layer_in(l), layer_out(l));
      std::vector<Real> next_dh(static_cast<size_t>(batch) * layer_in(l));
      gemm(dh.data(), ws.wt.data(), next_dh.data(), batch, layer_out(l), layer_in(l));
      if (l == kResidualLayer) add_into(next_dh.data(), skip_grad.data(), next_dh.size());
      dh.swap(next_dh);
    }
  }
}

template class MlpField<float>;
template class MlpField<double>;

}  // namespace vdmforge
