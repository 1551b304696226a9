#include "pmw/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pmw::ops {

namespace {

void require_rank(const std::vector<int>& shape, int rank, const char* op,
                  const char* arg) {
  if (static_cast<int>(shape.size()) != rank) {
    throw ShapeError(std::string(op) + ": " + arg + " must have rank " +
                     std::to_string(rank) + ", got shape " + shape_str(shape));
  }
}

// Valid output-column range for a given kernel column: wi = wo*sw + k - p
// must land in [0, in_w). Returns [lo, hi] inclusive; empty when lo > hi.
struct ColRange {
  int lo, hi;
};
ColRange col_range(int out_w, int in_w, int k, int stride, int pad) {
  int lo = 0;
  const int num = pad - k;
  if (num > 0) lo = (num + stride - 1) / stride;
  int hi = out_w - 1;
  const int top = in_w - 1 + pad - k;
  if (top < 0) return {1, 0};
  hi = std::min(hi, top / stride);
  return {lo, hi};
}

}  // namespace

int conv_out_dim(int in, int k, int stride, int pad) {
  if (k < 1) throw ShapeError("kernel size must be >= 1, got " + std::to_string(k));
  if (stride < 1) throw ShapeError("stride must be >= 1, got " + std::to_string(stride));
  if (pad < 0) throw ShapeError("padding must be >= 0, got " + std::to_string(pad));
  const int out = (in + 2 * pad - k) / stride + 1;
  if (in + 2 * pad < k || out < 1) {
    throw ShapeError("window " + std::to_string(k) + " does not fit input " +
                     std::to_string(in) + " with pad " + std::to_string(pad) +
                     " stride " + std::to_string(stride));
  }
  return out;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 const ConvSpec& spec) {
  require_rank(x.shape(), 4, "conv2d", "input");
  require_rank(w.shape(), 4, "conv2d", "weights");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int F = w.dim(0);
  if (w.dim(1) != C) {
    throw ShapeError("conv2d: input channels (" + std::to_string(C) +
                     ") != weight channels (" + std::to_string(w.dim(1)) + ")");
  }
  if (w.dim(2) != spec.kh || w.dim(3) != spec.kw) {
    throw ShapeError("conv2d: weight kernel " + std::to_string(w.dim(2)) + "x" +
                     std::to_string(w.dim(3)) + " != spec kernel " +
                     std::to_string(spec.kh) + "x" + std::to_string(spec.kw));
  }
  if (!b.empty() && (b.rank() != 1 || b.dim(0) != F)) {
    throw ShapeError("conv2d: bias shape " + shape_str(b.shape()) +
                     " != [" + std::to_string(F) + "]");
  }
  const int Ho = conv_out_dim(H, spec.kh, spec.sh, spec.ph);
  const int Wo = conv_out_dim(W, spec.kw, spec.sw, spec.pw);

  Tensor<T> out({N, F, Ho, Wo});
  const T* xp = x.data();
  const T* wp = w.data();
  T* op = out.data();

  for (int n = 0; n < N; ++n) {
    for (int f = 0; f < F; ++f) {
      T* out_plane = op + (static_cast<std::int64_t>(n) * F + f) * Ho * Wo;
      const T bias = b.empty() ? T(0) : b[f];
      std::fill(out_plane, out_plane + static_cast<std::int64_t>(Ho) * Wo, bias);
      for (int c = 0; c < C; ++c) {
        const T* x_plane = xp + (static_cast<std::int64_t>(n) * C + c) * H * W;
        const T* w_plane = wp + (static_cast<std::int64_t>(f) * C + c) * spec.kh * spec.kw;
        for (int kh = 0; kh < spec.kh; ++kh) {
          for (int kw = 0; kw < spec.kw; ++kw) {
            const T wv = w_plane[kh * spec.kw + kw];
            if (wv == T(0)) continue;
            const auto [wlo, whi] = col_range(Wo, W, kw, spec.sw, spec.pw);
            for (int ho = 0; ho < Ho; ++ho) {
              const int hi = ho * spec.sh + kh - spec.ph;
              if (hi < 0 || hi >= H) continue;
              const T* x_row = x_plane + static_cast<std::int64_t>(hi) * W + (kw - spec.pw);
              T* out_row = out_plane + static_cast<std::int64_t>(ho) * Wo;
              if (spec.sw == 1) {
                for (int wo = wlo; wo <= whi; ++wo) out_row[wo] += wv * x_row[wo];
              } else {
                for (int wo = wlo; wo <= whi; ++wo)
                  out_row[wo] += wv * x_row[static_cast<std::int64_t>(wo) * spec.sw];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w,
                             const ConvSpec& spec, const Tensor<T>& dy,
                             bool need_dx, bool need_dw) {
  require_rank(dy.shape(), 4, "conv2d_backward", "dy");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int F = w.dim(0);
  const int Ho = dy.dim(2), Wo = dy.dim(3);
  if (dy.dim(0) != N || dy.dim(1) != F) {
    throw ShapeError("conv2d_backward: dy shape " + shape_str(dy.shape()) +
                     " inconsistent with input/weights");
  }

  ConvGrads<T> g;
  if (need_dx) g.dx = Tensor<T>(x.shape());
  if (need_dw) {
    g.dw = Tensor<T>(w.shape());
    g.db = Tensor<T>({F});
  }
  const T* xp = x.data();
  const T* wp = w.data();
  const T* dyp = dy.data();

  for (int n = 0; n < N; ++n) {
    for (int f = 0; f < F; ++f) {
      const T* dy_plane = dyp + (static_cast<std::int64_t>(n) * F + f) * Ho * Wo;
      if (need_dw) {
        T acc = 0;
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(Ho) * Wo; ++i)
          acc += dy_plane[i];
        g.db[f] += acc;
      }
      for (int c = 0; c < C; ++c) {
        const T* x_plane = xp + (static_cast<std::int64_t>(n) * C + c) * H * W;
        const T* w_plane = wp + (static_cast<std::int64_t>(f) * C + c) * spec.kh * spec.kw;
        T* dw_plane = need_dw
            ? g.dw.data() + (static_cast<std::int64_t>(f) * C + c) * spec.kh * spec.kw
            : nullptr;
        T* dx_plane = need_dx
            ? g.dx.data() + (static_cast<std::int64_t>(n) * C + c) * H * W
            : nullptr;
        for (int kh = 0; kh < spec.kh; ++kh) {
          for (int kw = 0; kw < spec.kw; ++kw) {
            const auto [wlo, whi] = col_range(Wo, W, kw, spec.sw, spec.pw);
            if (wlo > whi) continue;
            T wacc = 0;
            const T wv = w_plane[kh * spec.kw + kw];
            for (int ho = 0; ho < Ho; ++ho) {
              const int hi = ho * spec.sh + kh - spec.ph;
              if (hi < 0 || hi >= H) continue;
              const T* x_row = x_plane + static_cast<std::int64_t>(hi) * W + (kw - spec.pw);
              const T* dy_row = dy_plane + static_cast<std::int64_t>(ho) * Wo;
              if (need_dw) {
                if (spec.sw == 1) {
                  for (int wo = wlo; wo <= whi; ++wo) wacc += dy_row[wo] * x_row[wo];
                } else {
                  for (int wo = wlo; wo <= whi; ++wo)
                    wacc += dy_row[wo] * x_row[static_cast<std::int64_t>(wo) * spec.sw];
                }
              }
              if (need_dx && wv != T(0)) {
                T* dx_row = dx_plane + static_cast<std::int64_t>(hi) * W + (kw - spec.pw);
                if (spec.sw == 1) {
                  for (int wo = wlo; wo <= whi; ++wo) dx_row[wo] += wv * dy_row[wo];
                } else {
                  for (int wo = wlo; wo <= whi; ++wo)
                    dx_row[static_cast<std::int64_t>(wo) * spec.sw] += wv * dy_row[wo];
                }
              }
            }
            if (need_dw) dw_plane[kh * spec.kw + kw] += wacc;
          }
        }
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x, const PoolSpec& spec,
                    std::vector<std::int64_t>* argmax_out) {
  require_rank(x.shape(), 4, "maxpool2d", "input");
  if (spec.ph >= spec.kh || spec.pw >= spec.kw) {
    throw ShapeError("maxpool2d: padding must be smaller than the window");
  }
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = conv_out_dim(H, spec.kh, spec.sh, spec.ph);
  const int Wo = conv_out_dim(W, spec.kw, spec.sw, spec.pw);
  Tensor<T> out({N, C, Ho, Wo});
  if (argmax_out) argmax_out->assign(out.size(), -1);

  const T* xp = x.data();
  std::int64_t oi = 0;
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const std::int64_t plane = (static_cast<std::int64_t>(n) * C + c) * H * W;
      for (int ho = 0; ho < Ho; ++ho) {
        for (int wo = 0; wo < Wo; ++wo, ++oi) {
          T best = -std::numeric_limits<T>::infinity();
          std::int64_t best_idx = -1;
          for (int kh = 0; kh < spec.kh; ++kh) {
            const int hi = ho * spec.sh + kh - spec.ph;
            if (hi < 0 || hi >= H) continue;
            for (int kw = 0; kw < spec.kw; ++kw) {
              const int wi = wo * spec.sw + kw - spec.pw;
              if (wi < 0 || wi >= W) continue;
              const T v = xp[plane + static_cast<std::int64_t>(hi) * W + wi];
              if (v > best) {
                best = v;
                best_idx = plane + static_cast<std::int64_t>(hi) * W + wi;
              }
            }
          }
          out[oi] = best;
          if (argmax_out) (*argmax_out)[static_cast<std::size_t>(oi)] = best_idx;
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> maxpool2d_backward(const std::vector<int>& x_shape,
                             const std::vector<std::int64_t>& argmax,
                             const Tensor<T>& dy) {
  Tensor<T> dx(x_shape);
  if (static_cast<std::int64_t>(argmax.size()) != dy.size()) {
    throw ShapeError("maxpool2d_backward: argmax/dy size mismatch");
  }
  for (std::int64_t i = 0; i < dy.size(); ++i) {
    dx[argmax[static_cast<std::size_t>(i)]] += dy[i];
  }
  return dx;
}

template <typename T>
Tensor<T> avgpool2d(const Tensor<T>& x, const PoolSpec& spec) {
  require_rank(x.shape(), 4, "avgpool2d", "input");
  if (spec.ph >= spec.kh || spec.pw >= spec.kw) {
    throw ShapeError("avgpool2d: padding must be smaller than the window");
  }
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = conv_out_dim(H, spec.kh, spec.sh, spec.ph);
  const int Wo = conv_out_dim(W, spec.kw, spec.sw, spec.pw);
  Tensor<T> out({N, C, Ho, Wo});

  const T* xp = x.data();
  std::int64_t oi = 0;
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const std::int64_t plane = (static_cast<std::int64_t>(n) * C + c) * H * W;
      for (int ho = 0; ho < Ho; ++ho) {
        const int h0 = std::max(0, ho * spec.sh - spec.ph);
        const int h1 = std::min(H, ho * spec.sh - spec.ph + spec.kh);
        for (int wo = 0; wo < Wo; ++wo, ++oi) {
          const int w0 = std::max(0, wo * spec.sw - spec.pw);
          const int w1 = std::min(W, wo * spec.sw - spec.pw + spec.kw);
          T acc = 0;
          for (int hi = h0; hi < h1; ++hi) {
            const T* row = xp + plane + static_cast<std::int64_t>(hi) * W;
            for (int wi = w0; wi < w1; ++wi) acc += row[wi];
          }
          out[oi] = acc / static_cast<T>((h1 - h0) * (w1 - w0));
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> avgpool2d_backward(const std::vector<int>& x_shape,
                             const PoolSpec& spec, const Tensor<T>& dy) {
  const int N = x_shape[0], C = x_shape[1], H = x_shape[2], W = x_shape[3];
  const int Ho = dy.dim(2), Wo = dy.dim(3);
  Tensor<T> dx(x_shape);
  std::int64_t oi = 0;
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const std::int64_t plane = (static_cast<std::int64_t>(n) * C + c) * H * W;
      for (int ho = 0; ho < Ho; ++ho) {
        const int h0 = std::max(0, ho * spec.sh - spec.ph);
        const int h1 = std::min(H, ho * spec.sh - spec.ph + spec.kh);
        for (int wo = 0; wo < Wo; ++wo, ++oi) {
          const int w0 = std::max(0, wo * spec.sw - spec.pw);
          const int w1 = std::min(W, wo * spec.sw - spec.pw + spec.kw);
          const T share = dy[oi] / static_cast<T>((h1 - h0) * (w1 - w0));
          for (int hi = h0; hi < h1; ++hi) {
            T* row = dx.data() + plane + static_cast<std::int64_t>(hi) * W;
            for (int wi = w0; wi < w1; ++wi) row[wi] += share;
          }
        }
      }
    }
  }
  return dx;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require_rank(x.shape(), 4, "global_avg_pool", "input");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor<T> out({N, C});
  const T inv = T(1) / static_cast<T>(H * W);
  const T* xp = x.data();
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const T* plane = xp + (static_cast<std::int64_t>(n) * C + c) * H * W;
      T acc = 0;
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(H) * W; ++i) acc += plane[i];
      out.at(n, c) = acc * inv;
    }
  }
  return out;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const std::vector<int>& x_shape,
                                   const Tensor<T>& dy) {
  const int N = x_shape[0], C = x_shape[1], H = x_shape[2], W = x_shape[3];
  Tensor<T> dx(x_shape);
  const T inv = T(1) / static_cast<T>(H * W);
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const T share = dy.at(n, c) * inv;
      T* plane = dx.data() + (static_cast<std::int64_t>(n) * C + c) * H * W;
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(H) * W; ++i) plane[i] = share;
    }
  }
  return dx;
}

template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  require_rank(x.shape(), 2, "dense", "input");
  require_rank(w.shape(), 2, "dense", "weights");
  const int N = x.dim(0), D = x.dim(1), K = w.dim(1);
  if (w.dim(0) != D) {
    throw ShapeError("dense: input width (" + std::to_string(D) +
                     ") != weight rows (" + std::to_string(w.dim(0)) + ")");
  }
  if (!b.empty() && (b.rank() != 1 || b.dim(0) != K)) {
    throw ShapeError("dense: bias shape " + shape_str(b.shape()) + " != [" +
                     std::to_string(K) + "]");
  }
  Tensor<T> out({N, K});
  for (int n = 0; n < N; ++n) {
    T* out_row = out.data() + static_cast<std::int64_t>(n) * K;
    if (!b.empty()) std::copy(b.data(), b.data() + K, out_row);
    const T* x_row = x.data() + static_cast<std::int64_t>(n) * D;
    for (int d = 0; d < D; ++d) {
      const T a = x_row[d];
      if (a == T(0)) continue;
      const T* w_row = w.data() + static_cast<std::int64_t>(d) * K;
      for (int k = 0; k < K; ++k) out_row[k] += a * w_row[k];
    }
  }
  return out;
}

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w,
                             const Tensor<T>& dy, bool need_dx) {
  const int N = x.dim(0), D = x.dim(1), K = w.dim(1);
  DenseGrads<T> g;
  g.dw = Tensor<T>(w.shape());
  g.db = Tensor<T>({K});
  if (need_dx) g.dx = Tensor<T>(x.shape());
  for (int n = 0; n < N; ++n) {
    const T* dy_row = dy.data() + static_cast<std::int64_t>(n) * K;
    const T* x_row = x.data() + static_cast<std::int64_t>(n) * D;
    for (int k = 0; k < K; ++k) g.db[k] += dy_row[k];
    for (int d = 0; d < D; ++d) {
      const T* w_row = w.data() + static_cast<std::int64_t>(d) * K;
      T* dw_row = g.dw.data() + static_cast<std::int64_t>(d) * K;
      const T a = x_row[d];
      T acc = 0;
      for (int k = 0; k < K; ++k) {
        dw_row[k] += a * dy_row[k];
        acc += w_row[k] * dy_row[k];
      }
      if (need_dx) g.dx.at(n, d) = acc;
    }
  }
  return g;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  Tensor<T> dx(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
  return dx;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  // Largest representable value below 1, so saturation stays inside (0,1).
  const T hi = std::nextafter(T(1), T(0));
  const T lo = std::numeric_limits<T>::min();
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const T v = x[i];
    T y;
    if (v >= T(0)) {
      y = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      y = e / (T(1) + e);
    }
    out[i] = std::clamp(y, lo, hi);
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  Tensor<T> dx(y.shape());
  for (std::int64_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * y[i] * (T(1) - y[i]);
  return dx;
}

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma,
                      const Tensor<T>& beta, Tensor<T>& running_mean,
                      Tensor<T>& running_var, T momentum, T eps, Mode mode,
                      BatchNormCtx<T>* ctx) {
  require_rank(x.shape(), 4, "batchnorm2d", "input");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  for (const Tensor<T>* t :
       {&gamma, &beta, const_cast<const Tensor<T>*>(&running_mean),
        const_cast<const Tensor<T>*>(&running_var)}) {
    if (t->rank() != 1 || t->dim(0) != C) {
      throw ShapeError("batchnorm2d: per-channel parameter shape " +
                       shape_str(t->shape()) + " != [" + std::to_string(C) + "]");
    }
  }
  const std::int64_t plane = static_cast<std::int64_t>(H) * W;
  const std::int64_t per_channel = static_cast<std::int64_t>(N) * plane;

  std::vector<T> mean(C), var(C);
  const bool use_batch_stats = (mode == Mode::Train);
  if (use_batch_stats) {
    for (int c = 0; c < C; ++c) {
      double acc = 0;
      for (int n = 0; n < N; ++n) {
        const T* p = x.data() + (static_cast<std::int64_t>(n) * C + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) acc += p[i];
      }
      mean[c] = static_cast<T>(acc / static_cast<double>(per_channel));
    }
    for (int c = 0; c < C; ++c) {
      double acc = 0;
      for (int n = 0; n < N; ++n) {
        const T* p = x.data() + (static_cast<std::int64_t>(n) * C + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
          const double d = static_cast<double>(p[i]) - static_cast<double>(mean[c]);
          acc += d * d;
        }
      }
      var[c] = static_cast<T>(acc / static_cast<double>(per_channel));
    }
    for (int c = 0; c < C; ++c) {
      running_mean[c] = momentum * running_mean[c] + (T(1) - momentum) * mean[c];
      running_var[c] = momentum * running_var[c] + (T(1) - momentum) * var[c];
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = running_mean[c];
      var[c] = running_var[c];
    }
  }

  std::vector<T> invstd(C);
  for (int c = 0; c < C; ++c) invstd[c] = T(1) / std::sqrt(var[c] + eps);

  Tensor<T> out(x.shape());
  if (ctx) {
    ctx->xhat.resize(static_cast<std::size_t>(x.size()));
    ctx->invstd = invstd;
    ctx->x_shape = x.shape();
    ctx->stats_from_batch = use_batch_stats;
  }
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const std::int64_t base = (static_cast<std::int64_t>(n) * C + c) * plane;
      const T m = mean[c], is = invstd[c], g = gamma[c], bt = beta[c];
      for (std::int64_t i = 0; i < plane; ++i) {
        const T xh = (x[base + i] - m) * is;
        if (ctx) ctx->xhat[static_cast<std::size_t>(base + i)] = xh;
        out[base + i] = xh * g + bt;
      }
    }
  }
  return out;
}

template <typename T>
BatchNormGrads<T> batchnorm2d_backward(const BatchNormCtx<T>& ctx,
                                       const Tensor<T>& gamma,
                                       const Tensor<T>& dy) {
  const int N = ctx.x_shape[0], C = ctx.x_shape[1], H = ctx.x_shape[2],
            W = ctx.x_shape[3];
  const std::int64_t plane = static_cast<std::int64_t>(H) * W;
  const T m = static_cast<T>(static_cast<std::int64_t>(N) * plane);

  BatchNormGrads<T> g;
  g.dx = Tensor<T>(ctx.x_shape);
  g.dgamma = Tensor<T>({C});
  g.dbeta = Tensor<T>({C});

  std::vector<T> sum_dy(C, T(0)), sum_dy_xhat(C, T(0));
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const std::int64_t base = (static_cast<std::int64_t>(n) * C + c) * plane;
      T s1 = 0, s2 = 0;
      for (std::int64_t i = 0; i < plane; ++i) {
        s1 += dy[base + i];
        s2 += dy[base + i] * ctx.xhat[static_cast<std::size_t>(base + i)];
      }
      sum_dy[c] += s1;
      sum_dy_xhat[c] += s2;
    }
  }
  for (int c = 0; c < C; ++c) {
    g.dbeta[c] = sum_dy[c];
    g.dgamma[c] = sum_dy_xhat[c];
  }

  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const std::int64_t base = (static_cast<std::int64_t>(n) * C + c) * plane;
      const T gc = gamma[c], is = ctx.invstd[c];
      if (ctx.stats_from_batch) {
        const T k = gc * is / m;
        for (std::int64_t i = 0; i < plane; ++i) {
          g.dx[base + i] =
              k * (m * dy[base + i] - sum_dy[c] -
                   ctx.xhat[static_cast<std::size_t>(base + i)] * sum_dy_xhat[c]);
        }
      } else {
        // Stats were constants (inference path): plain affine gradient.
        for (std::int64_t i = 0; i < plane; ++i) g.dx[base + i] = gc * is * dy[base + i];
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, T rate, Rng& rng, Mode mode,
                  std::vector<std::uint8_t>* mask_out) {
  if (!(rate >= T(0) && rate < T(1))) {
    throw ShapeError("dropout: rate must be in [0,1), got " + std::to_string(rate));
  }
  if (mode == Mode::Infer || rate == T(0)) {
    if (mask_out) mask_out->assign(static_cast<std::size_t>(x.size()), 1);
    return x;
  }
  const T scale = T(1) / (T(1) - rate);
  Tensor<T> out(x.shape());
  if (mask_out) mask_out->assign(static_cast<std::size_t>(x.size()), 0);
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const bool keep = rng.next_double() >= static_cast<double>(rate);
    if (keep) {
      out[i] = x[i] * scale;
      if (mask_out) (*mask_out)[static_cast<std::size_t>(i)] = 1;
    }
  }
  return out;
}

template <typename T>
Tensor<T> dropout_backward(const std::vector<std::uint8_t>& mask, T rate,
                           const Tensor<T>& dy) {
  const T scale = T(1) / (T(1) - rate);
  Tensor<T> dx(dy.shape());
  for (std::int64_t i = 0; i < dy.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) dx[i] = dy[i] * scale;
  }
  return dx;
}

namespace {

template <typename T>
void check_bce_shapes(const Tensor<T>& prob, const Tensor<T>& label) {
  const bool prob_ok = prob.rank() == 1 || (prob.rank() == 2 && prob.dim(1) == 1);
  const bool label_ok = label.rank() == 1 || (label.rank() == 2 && label.dim(1) == 1);
  if (!prob_ok || !label_ok || prob.size() != label.size()) {
    throw ShapeError("bce_loss: prob " + shape_str(prob.shape()) + " vs label " +
                     shape_str(label.shape()) + "; expected [N] or [N,1] with equal N");
  }
}

}  // namespace

template <typename T>
double bce_loss(const Tensor<T>& prob, const Tensor<T>& label) {
  check_bce_shapes(prob, label);
  const double lo = kBceProbClamp, hi = 1.0 - kBceProbClamp;
  double acc = 0;
  for (std::int64_t i = 0; i < prob.size(); ++i) {
    const double p = std::clamp(static_cast<double>(prob[i]), lo, hi);
    const double y = static_cast<double>(label[i]);
    acc += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  return acc / static_cast<double>(prob.size());
}

template <typename T>
Tensor<T> bce_loss_backward(const Tensor<T>& prob, const Tensor<T>& label) {
  check_bce_shapes(prob, label);
  const double lo = kBceProbClamp, hi = 1.0 - kBceProbClamp;
  const double inv_n = 1.0 / static_cast<double>(prob.size());
  Tensor<T> dp(prob.shape());
  for (std::int64_t i = 0; i < prob.size(); ++i) {
    const double raw = static_cast<double>(prob[i]);
    if (raw < lo || raw > hi) continue;  // clamp active: flat region
    const double y = static_cast<double>(label[i]);
    dp[i] = static_cast<T>((-(y / raw) + (1.0 - y) / (1.0 - raw)) * inv_n);
  }
  return dp;
}

#define PMW_INSTANTIATE_OPS(T)                                                 \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&,            \
                               const Tensor<T>&, const ConvSpec&);            \
  template ConvGrads<T> conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&,\
                                           const ConvSpec&, const Tensor<T>&, \
                                           bool, bool);                       \
  template Tensor<T> maxpool2d<T>(const Tensor<T>&, const PoolSpec&,          \
                                  std::vector<std::int64_t>*);                \
  template Tensor<T> maxpool2d_backward<T>(const std::vector<int>&,           \
                                           const std::vector<std::int64_t>&,  \
                                           const Tensor<T>&);                 \
  template Tensor<T> avgpool2d<T>(const Tensor<T>&, const PoolSpec&);         \
  template Tensor<T> avgpool2d_backward<T>(const std::vector<int>&,           \
                                           const PoolSpec&, const Tensor<T>&);\
  template Tensor<T> global_avg_pool<T>(const Tensor<T>&);                    \
  template Tensor<T> global_avg_pool_backward<T>(const std::vector<int>&,     \
                                                 const Tensor<T>&);           \
  template Tensor<T> dense<T>(const Tensor<T>&, const Tensor<T>&,             \
                              const Tensor<T>&);                              \
  template DenseGrads<T> dense_backward<T>(const Tensor<T>&, const Tensor<T>&,\
                                           const Tensor<T>&, bool);           \
  template Tensor<T> relu<T>(const Tensor<T>&);                               \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                            \
  template Tensor<T> sigmoid_backward<T>(const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> batchnorm2d<T>(const Tensor<T>&, const Tensor<T>&,       \
                                    const Tensor<T>&, Tensor<T>&, Tensor<T>&, \
                                    T, T, Mode, BatchNormCtx<T>*);            \
  template BatchNormGrads<T> batchnorm2d_backward<T>(const BatchNormCtx<T>&,  \
                                                     const Tensor<T>&,        \
                                                     const Tensor<T>&);       \
  template Tensor<T> dropout<T>(const Tensor<T>&, T, Rng&, Mode,              \
                                std::vector<std::uint8_t>*);                  \
  template Tensor<T> dropout_backward<T>(const std::vector<std::uint8_t>&, T, \
                                         const Tensor<T>&);                   \
  template double bce_loss<T>(const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> bce_loss_backward<T>(const Tensor<T>&, const Tensor<T>&);

PMW_INSTANTIATE_OPS(float)
PMW_INSTANTIATE_OPS(double)

#undef PMW_INSTANTIATE_OPS

}  // namespace pmw::ops
