#pragma once

#include <cstdint>
#include <vector>

#include "pmw/rng.hpp"
#include "pmw/tensor.hpp"

namespace pmw::ops {

// Zero-padded cross-correlation (no kernel flip); output dims use floor
// division: out = (in + 2*pad - k) / stride + 1.
struct ConvSpec {
  int kh = 1, kw = 1;
  int sh = 1, sw = 1;
  int ph = 0, pw = 0;
};

struct PoolSpec {
  int kh = 2, kw = 2;
  int sh = 2, sw = 2;
  int ph = 0, pw = 0;
};

int conv_out_dim(int in, int k, int stride, int pad);

// x: [N,C,H,W], w: [F,C,kh,kw], b: [F] (may be empty for bias-free convs).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 const ConvSpec& spec);

template <typename T>
struct ConvGrads {
  Tensor<T> dx, dw, db;
};
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w,
                             const ConvSpec& spec, const Tensor<T>& dy,
                             bool need_dx, bool need_dw);

// Max pooling; padded cells never win (treated as -inf). argmax_out, when
// given, receives the flat input offset of each window maximum for backward.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x, const PoolSpec& spec,
                    std::vector<std::int64_t>* argmax_out = nullptr);
template <typename T>
Tensor<T> maxpool2d_backward(const std::vector<int>& x_shape,
                             const std::vector<std::int64_t>& argmax,
                             const Tensor<T>& dy);

// Average pooling; padding is excluded from the mean (each window divides by
// the number of real cells it covers).
template <typename T>
Tensor<T> avgpool2d(const Tensor<T>& x, const PoolSpec& spec);
template <typename T>
Tensor<T> avgpool2d_backward(const std::vector<int>& x_shape,
                             const PoolSpec& spec, const Tensor<T>& dy);

// [N,C,H,W] -> [N,C], mean over each channel plane.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);
template <typename T>
Tensor<T> global_avg_pool_backward(const std::vector<int>& x_shape,
                                   const Tensor<T>& dy);

// x: [N,D], w: [D,K], b: [K].
template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

template <typename T>
struct DenseGrads {
  Tensor<T> dx, dw, db;
};
template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w,
                             const Tensor<T>& dy, bool need_dx);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy);

// Stable two-branch sigmoid; output strictly inside (0,1).
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
// y is the forward output.
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& dy);

template <typename T>
struct BatchNormCtx {
  std::vector<T> xhat;    // normalized activations, same layout as x
  std::vector<T> invstd;  // per channel
  std::vector<int> x_shape;
  bool stats_from_batch = true;  // false when running stats were used
};

// Per-channel batchnorm over [N,C,H,W]. Train mode normalizes with batch
// statistics and folds them into the running stats:
//   running = momentum * running + (1 - momentum) * batch.
// Infer mode uses the running stats only. Variances are biased (1/N).
template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma,
                      const Tensor<T>& beta, Tensor<T>& running_mean,
                      Tensor<T>& running_var, T momentum, T eps, Mode mode,
                      BatchNormCtx<T>* ctx = nullptr);

template <typename T>
struct BatchNormGrads {
  Tensor<T> dx, dgamma, dbeta;
};
template <typename T>
BatchNormGrads<T> batchnorm2d_backward(const BatchNormCtx<T>& ctx,
                                       const Tensor<T>& gamma,
                                       const Tensor<T>& dy);

// Inverted dropout: train mode zeroes with probability `rate` and scales
// survivors by 1/(1-rate); infer mode is the identity. mask_out (1 = kept)
// is filled in train mode when provided.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, T rate, Rng& rng, Mode mode,
                  std::vector<std::uint8_t>* mask_out = nullptr);
template <typename T>
Tensor<T> dropout_backward(const std::vector<std::uint8_t>& mask, T rate,
                           const Tensor<T>& dy);

inline constexpr double kBceProbClamp = 1e-7;

// Mean of -[y ln p + (1-y) ln(1-p)]; probabilities clamped to
// [kBceProbClamp, 1-kBceProbClamp]. prob: [N,1] or [N]; label: [N] in {0,1}.
template <typename T>
double bce_loss(const Tensor<T>& prob, const Tensor<T>& label);
// d(mean loss)/d(prob), same shape as prob.
template <typename T>
Tensor<T> bce_loss_backward(const Tensor<T>& prob, const Tensor<T>& label);

}  // namespace pmw::ops
