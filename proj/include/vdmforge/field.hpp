#pragma once

#include <cstdint>
#include <vector>

namespace vdmforge {

// Fully connected deformation field [0,1]^2 -> R^3: 8 linear layers of hidden
// width h (default 512), LeakyReLU(0.01) on the seven hidden layers, linear
// output, and a skip connection around the fourth layer
// (h4 = act(W4 h3 + b4) + h3). Parameters are packed per layer as a
// row-major [in x out] weight block followed by the bias; total count is
// 6h^2 + 12h + 3, asserted at construction.
template <typename Real>
class MlpField {
 public:
  static constexpr int kLayers = 8;
  static constexpr int kResidualLayer = 4;  // 1-based
  static constexpr Real kLeakySlope = Real(0.01);

  explicit MlpField(int hidden_width = 512);

  static size_t parameter_count(int hidden_width) {
    size_t h = static_cast<size_t>(hidden_width);
    return 6 * h * h + 12 * h + 3;
  }

  int hidden_width() const { return hidden_; }
  size_t size() const { return params_.size(); }
  std::vector<Real>& params() { return params_; }
  const std::vector<Real>& params() const { return params_; }

  int layer_in(int layer) const { return layer == 1 ? 2 : hidden_; }
  int layer_out(int layer) const { return layer == kLayers ? 3 : hidden_; }
  size_t weight_offset(int layer) const { return offsets_[layer - 1]; }
  size_t bias_offset(int layer) const {
    return offsets_[layer - 1] + static_cast<size_t>(layer_in(layer)) * layer_out(layer);
  }

  // Fan-in-scaled uniform draws, U(-1/sqrt(in), 1/sqrt(in)) per layer, from a
  // splitmix64 stream indexed by parameter position.
  void randomize(uint64_t seed);

  // Throws NumericError if any parameter is non-finite.
  void check_finite() const;

  // Activation cache for one batch; reused across steps to avoid allocation.
  struct Workspace {
    int batch = 0;
    std::vector<Real> input;                 // batch x 2
    std::vector<Real> activated[kLayers];    // act(z_l), batch x out_l (l=1..7)
    std::vector<Real> scratch_a, scratch_b;  // batch x hidden
    std::vector<Real> wt;                    // transposed weights
  };

  // uv is batch x 2 row-major, out is batch x 3. When ws is given, the
  // activations are cached for a following backward() call.
  void forward(const Real* uv, int batch, Real* out, Workspace* ws = nullptr) const;

  // Gradient of sum_i <out_i, out_grad_i> with respect to the parameters,
  // accumulated into param_grad (sized like params()). Requires the workspace
  // of the matching forward call.
  void backward(Workspace& ws, const Real* out_grad, std::vector<Real>& param_grad) const;

 private:
  void forward_chunk(const Real* uv, int batch, Real* out, Workspace& w, bool cache) const;

  int hidden_;
  std::vector<Real> params_;
  std::vector<size_t> offsets_;  // per layer start
};

using MlpFieldF = MlpField<float>;
using MlpFieldD = MlpField<double>;

}  // namespace vdmforge
