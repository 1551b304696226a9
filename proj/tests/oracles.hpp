// Naive reference implementations used to cross-check the optimized kernels.
// Everything here is direct-definition code with no shared logic with
// pmw::ops; keep it that way.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "pmw/metrics.hpp"
#include "pmw/ops.hpp"
#include "pmw/tensor.hpp"

namespace oracle {

template <typename T>
pmw::Tensor<T> conv2d(const pmw::Tensor<T>& x, const pmw::Tensor<T>& w,
                      const pmw::Tensor<T>& b, const pmw::ops::ConvSpec& s) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int F = w.dim(0);
  const int Ho = (H + 2 * s.ph - s.kh) / s.sh + 1;
  const int Wo = (W + 2 * s.pw - s.kw) / s.sw + 1;
  pmw::Tensor<T> out({N, F, Ho, Wo});
  for (int n = 0; n < N; ++n)
    for (int f = 0; f < F; ++f)
      for (int ho = 0; ho < Ho; ++ho)
        for (int wo = 0; wo < Wo; ++wo) {
          double acc = b.empty() ? 0.0 : static_cast<double>(b.at(f));
          for (int c = 0; c < C; ++c)
            for (int kh = 0; kh < s.kh; ++kh)
              for (int kw = 0; kw < s.kw; ++kw) {
                const int hi = ho * s.sh + kh - s.ph;
                const int wi = wo * s.sw + kw - s.pw;
                if (hi < 0 || hi >= H || wi < 0 || wi >= W) continue;
                acc += static_cast<double>(x.at(n, c, hi, wi)) *
                       static_cast<double>(w.at(f, c, kh, kw));
              }
          out.at(n, f, ho, wo) = static_cast<T>(acc);
        }
  return out;
}

template <typename T>
pmw::Tensor<T> dense(const pmw::Tensor<T>& x, const pmw::Tensor<T>& w,
                     const pmw::Tensor<T>& b) {
  const int N = x.dim(0), D = x.dim(1), K = w.dim(1);
  pmw::Tensor<T> out({N, K});
  for (int n = 0; n < N; ++n)
    for (int k = 0; k < K; ++k) {
      double acc = b.empty() ? 0.0 : static_cast<double>(b.at(k));
      for (int d = 0; d < D; ++d) {
        acc += static_cast<double>(x.at(n, d)) * static_cast<double>(w.at(d, k));
      }
      out.at(n, k) = static_cast<T>(acc);
    }
  return out;
}

template <typename T>
pmw::Tensor<T> maxpool2d(const pmw::Tensor<T>& x, const pmw::ops::PoolSpec& s) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = (H + 2 * s.ph - s.kh) / s.sh + 1;
  const int Wo = (W + 2 * s.pw - s.kw) / s.sw + 1;
  pmw::Tensor<T> out({N, C, Ho, Wo});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int ho = 0; ho < Ho; ++ho)
        for (int wo = 0; wo < Wo; ++wo) {
          T best = -std::numeric_limits<T>::infinity();
          for (int kh = 0; kh < s.kh; ++kh)
            for (int kw = 0; kw < s.kw; ++kw) {
              const int hi = ho * s.sh + kh - s.ph;
              const int wi = wo * s.sw + kw - s.pw;
              if (hi < 0 || hi >= H || wi < 0 || wi >= W) continue;
              best = std::max(best, x.at(n, c, hi, wi));
            }
          out.at(n, c, ho, wo) = best;
        }
  return out;
}

template <typename T>
pmw::Tensor<T> avgpool2d(const pmw::Tensor<T>& x, const pmw::ops::PoolSpec& s) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = (H + 2 * s.ph - s.kh) / s.sh + 1;
  const int Wo = (W + 2 * s.pw - s.kw) / s.sw + 1;
  pmw::Tensor<T> out({N, C, Ho, Wo});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int ho = 0; ho < Ho; ++ho)
        for (int wo = 0; wo < Wo; ++wo) {
          double acc = 0;
          int count = 0;
          for (int kh = 0; kh < s.kh; ++kh)
            for (int kw = 0; kw < s.kw; ++kw) {
              const int hi = ho * s.sh + kh - s.ph;
              const int wi = wo * s.sw + kw - s.pw;
              if (hi < 0 || hi >= H || wi < 0 || wi >= W) continue;
              acc += static_cast<double>(x.at(n, c, hi, wi));
              ++count;
            }
          out.at(n, c, ho, wo) = static_cast<T>(acc / count);
        }
  return out;
}

template <typename T>
double bce(const pmw::Tensor<T>& prob, const pmw::Tensor<T>& label) {
  double acc = 0;
  for (std::int64_t i = 0; i < prob.size(); ++i) {
    double p = static_cast<double>(prob[i]);
    p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
    const double y = static_cast<double>(label[i]);
    acc += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  return acc / static_cast<double>(prob.size());
}

inline pmw::ConfusionMatrix confusion(const std::vector<double>& probs,
                                      const std::vector<int>& labels,
                                      double threshold) {
  pmw::ConfusionMatrix cm;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred = probs[i] >= threshold;
    if (labels[i] == 1 && pred) ++cm.tp;
    if (labels[i] == 1 && !pred) ++cm.fn;
    if (labels[i] == 0 && pred) ++cm.fp;
    if (labels[i] == 0 && !pred) ++cm.tn;
  }
  return cm;
}

template <typename T>
pmw::Tensor<T> random_tensor(std::vector<int> shape, std::mt19937& gen,
                             double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  pmw::Tensor<T> t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(dist(gen));
  return t;
}

template <typename T>
double max_abs_diff(const pmw::Tensor<T>& a, const pmw::Tensor<T>& b) {
  double worst = 0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return a.same_shape(b) ? worst : std::numeric_limits<double>::infinity();
}

}  // namespace oracle
