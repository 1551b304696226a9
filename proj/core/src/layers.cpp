#include "pmw/layers.hpp"

#include <algorithm>

namespace pmw::layers {

namespace {

const TensorF& only_input(const std::vector<const TensorF*>& in) {
  return *in[0];
}

}  // namespace

Conv2d::Conv2d(std::string name, std::string input, int in_channels,
               int out_channels, ops::ConvSpec spec, bool with_bias)
    : Node(std::move(name), {std::move(input)}),
      spec_(spec),
      in_channels_(in_channels),
      out_channels_(out_channels),
      with_bias_(with_bias) {
  params_.push_back(Param{
      name_ + "/weight",
      TensorF({out_channels_, in_channels_, spec_.kh, spec_.kw})});
  if (with_bias_) {
    params_.push_back(Param{name_ + "/bias", TensorF({out_channels_})});
  }
}

TensorF Conv2d::forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                        NodeCtx*) {
  static const TensorF kNoBias;
  const TensorF& bias = with_bias_ ? params_[1].value : kNoBias;
  return ops::conv2d(only_input(in), params_[0].value, bias, spec_);
}

std::vector<TensorF> Conv2d::backward(const TensorF& grad_out,
                                      const std::vector<const TensorF*>& in,
                                      const TensorF&, const NodeCtx&,
                                      const std::vector<bool>& need_input_grad,
                                      ParamGradMap& grads) {
  const bool need_dw = !params_[0].frozen || (with_bias_ && !params_[1].frozen);
  auto g = ops::conv2d_backward(only_input(in), params_[0].value, spec_,
                                grad_out, need_input_grad[0], need_dw);
  if (!params_[0].frozen) accumulate_param_grad(params_[0], std::move(g.dw), grads);
  if (with_bias_ && !params_[1].frozen) {
    accumulate_param_grad(params_[1], std::move(g.db), grads);
  }
  std::vector<TensorF> gin(1);
  gin[0] = std::move(g.dx);
  return gin;
}

Dense::Dense(std::string name, std::string input, int in_dim, int out_dim)
    : Node(std::move(name), {std::move(input)}),
      in_dim_(in_dim),
      out_dim_(out_dim) {
  params_.push_back(Param{name_ + "/weight", TensorF({in_dim_, out_dim_})});
  params_.push_back(Param{name_ + "/bias", TensorF({out_dim_})});
}

TensorF Dense::forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                       NodeCtx*) {
  return ops::dense(only_input(in), params_[0].value, params_[1].value);
}

std::vector<TensorF> Dense::backward(const TensorF& grad_out,
                                     const std::vector<const TensorF*>& in,
                                     const TensorF&, const NodeCtx&,
                                     const std::vector<bool>& need_input_grad,
                                     ParamGradMap& grads) {
  auto g = ops::dense_backward(only_input(in), params_[0].value, grad_out,
                               need_input_grad[0]);
  if (!params_[0].frozen) accumulate_param_grad(params_[0], std::move(g.dw), grads);
  if (!params_[1].frozen) accumulate_param_grad(params_[1], std::move(g.db), grads);
  std::vector<TensorF> gin(1);
  gin[0] = std::move(g.dx);
  return gin;
}

TensorF Relu::forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                      NodeCtx*) {
  return ops::relu(only_input(in));
}

std::vector<TensorF> Relu::backward(const TensorF& grad_out,
                                    const std::vector<const TensorF*>& in,
                                    const TensorF&, const NodeCtx&,
                                    const std::vector<bool>& need_input_grad,
                                    ParamGradMap&) {
  std::vector<TensorF> gin(1);
  if (need_input_grad[0]) gin[0] = ops::relu_backward(only_input(in), grad_out);
  return gin;
}

TensorF Sigmoid::forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                         NodeCtx*) {
  return ops::sigmoid(only_input(in));
}

std::vector<TensorF> Sigmoid::backward(const TensorF& grad_out,
                                       const std::vector<const TensorF*>&,
                                       const TensorF& out, const NodeCtx&,
                                       const std::vector<bool>& need_input_grad,
                                       ParamGradMap&) {
  std::vector<TensorF> gin(1);
  if (need_input_grad[0]) gin[0] = ops::sigmoid_backward(out, grad_out);
  return gin;
}

TensorF MaxPool2d::forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                           NodeCtx* ctx) {
  return ops::maxpool2d(only_input(in), spec_, ctx ? &ctx->argmax : nullptr);
}

std::vector<TensorF> MaxPool2d::backward(
    const TensorF& grad_out, const std::vector<const TensorF*>& in,
    const TensorF&, const NodeCtx& ctx,
    const std::vector<bool>& need_input_grad, ParamGradMap&) {
  std::vector<TensorF> gin(1);
  if (need_input_grad[0]) {
    gin[0] = ops::maxpool2d_backward(only_input(in).shape(), ctx.argmax, grad_out);
  }
  return gin;
}

TensorF AvgPool2d::forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                           NodeCtx*) {
  return ops::avgpool2d(only_input(in), spec_);
}

std::vector<TensorF> AvgPool2d::backward(
    const TensorF& grad_out, const std::vector<const TensorF*>& in,
    const TensorF&, const NodeCtx&, const std::vector<bool>& need_input_grad,
    ParamGradMap&) {
  std::vector<TensorF> gin(1);
  if (need_input_grad[0]) {
    gin[0] = ops::avgpool2d_backward(only_input(in).shape(), spec_, grad_out);
  }
  return gin;
}

TensorF GlobalAvgPool::forward(const std::vector<const TensorF*>& in, Mode,
                               Rng*, NodeCtx*) {
  return ops::global_avg_pool(only_input(in));
}

std::vector<TensorF> GlobalAvgPool::backward(
    const TensorF& grad_out, const std::vector<const TensorF*>& in,
    const TensorF&, const NodeCtx&, const std::vector<bool>& need_input_grad,
    ParamGradMap&) {
  std::vector<TensorF> gin(1);
  if (need_input_grad[0]) {
    gin[0] = ops::global_avg_pool_backward(only_input(in).shape(), grad_out);
  }
  return gin;
}

TensorF Flatten::forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                         NodeCtx*) {
  const TensorF& x = only_input(in);
  if (x.rank() < 2) {
    throw ShapeError("flatten '" + name_ + "': input rank must be >= 2");
  }
  const int n = x.dim(0);
  const int rest = static_cast<int>(x.size() / n);
  return TensorF({n, rest}, x.vec());
}

std::vector<TensorF> Flatten::backward(const TensorF& grad_out,
                                       const std::vector<const TensorF*>& in,
                                       const TensorF&, const NodeCtx&,
                                       const std::vector<bool>& need_input_grad,
                                       ParamGradMap&) {
  std::vector<TensorF> gin(1);
  if (need_input_grad[0]) gin[0] = TensorF(only_input(in).shape(), grad_out.vec());
  return gin;
}

BatchNorm2d::BatchNorm2d(std::string name, std::string input, int channels,
                         float momentum, float eps)
    : Node(std::move(name), {std::move(input)}),
      channels_(channels),
      momentum_(momentum),
      eps_(eps) {
  params_.push_back(Param{name_ + "/gamma", TensorF::full({channels_}, 1.0f)});
  params_.push_back(Param{name_ + "/beta", TensorF({channels_})});
  buffers_.push_back(Buffer{name_ + "/running_mean", TensorF({channels_})});
  buffers_.push_back(Buffer{name_ + "/running_var", TensorF::full({channels_}, 1.0f)});
}

TensorF BatchNorm2d::forward(const std::vector<const TensorF*>& in, Mode mode,
                             Rng*, NodeCtx* ctx) {
  const bool all_frozen = params_[0].frozen && params_[1].frozen;
  const Mode effective = all_frozen ? Mode::Infer : mode;
  return ops::batchnorm2d(only_input(in), params_[0].value, params_[1].value,
                          buffers_[0].value, buffers_[1].value, momentum_,
                          eps_, effective, ctx ? &ctx->bn : nullptr);
}

std::vector<TensorF> BatchNorm2d::backward(
    const TensorF& grad_out, const std::vector<const TensorF*>&, const TensorF&,
    const NodeCtx& ctx, const std::vector<bool>& need_input_grad,
    ParamGradMap& grads) {
  auto g = ops::batchnorm2d_backward(ctx.bn, params_[0].value, grad_out);
  if (!params_[0].frozen) accumulate_param_grad(params_[0], std::move(g.dgamma), grads);
  if (!params_[1].frozen) accumulate_param_grad(params_[1], std::move(g.dbeta), grads);
  std::vector<TensorF> gin(1);
  if (need_input_grad[0]) gin[0] = std::move(g.dx);
  return gin;
}

Dropout::Dropout(std::string name, std::string input, float rate)
    : Node(std::move(name), {std::move(input)}), rate_(rate) {
  if (!(rate >= 0.0f && rate < 1.0f)) {
    throw ShapeError("dropout '" + name_ + "': rate must be in [0,1)");
  }
}

TensorF Dropout::forward(const std::vector<const TensorF*>& in, Mode mode,
                         Rng* rng, NodeCtx* ctx) {
  if (mode == Mode::Train && rate_ > 0.0f && rng == nullptr) {
    throw ShapeError("dropout '" + name_ + "': train-mode forward needs an rng");
  }
  Rng dummy(0);
  return ops::dropout(only_input(in), rate_, rng ? *rng : dummy, mode,
                      ctx ? &ctx->mask : nullptr);
}

std::vector<TensorF> Dropout::backward(const TensorF& grad_out,
                                       const std::vector<const TensorF*>&,
                                       const TensorF&, const NodeCtx& ctx,
                                       const std::vector<bool>& need_input_grad,
                                       ParamGradMap&) {
  std::vector<TensorF> gin(1);
  if (need_input_grad[0]) {
    if (ctx.mask.empty()) {
      gin[0] = grad_out;  // forward ran in infer mode
    } else {
      gin[0] = ops::dropout_backward(ctx.mask, rate_, grad_out);
    }
  }
  return gin;
}

TensorF Add::forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                     NodeCtx*) {
  const TensorF& a = *in[0];
  const TensorF& b = *in[1];
  if (!a.same_shape(b)) {
    throw ShapeError("add '" + name_ + "': shapes " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
  TensorF out(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

std::vector<TensorF> Add::backward(const TensorF& grad_out,
                                   const std::vector<const TensorF*>&,
                                   const TensorF&, const NodeCtx&,
                                   const std::vector<bool>& need_input_grad,
                                   ParamGradMap&) {
  std::vector<TensorF> gin(2);
  if (need_input_grad[0]) gin[0] = grad_out;
  if (need_input_grad[1]) gin[1] = grad_out;
  return gin;
}

TensorF Concat::forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                        NodeCtx*) {
  if (in.size() < 2) {
    throw ShapeError("concat '" + name_ + "': needs at least two inputs");
  }
  const int N = in[0]->dim(0), H = in[0]->dim(2), W = in[0]->dim(3);
  int total_c = 0;
  for (const auto* t : in) {
    if (t->rank() != 4 || t->dim(0) != N || t->dim(2) != H || t->dim(3) != W) {
      throw ShapeError("concat '" + name_ + "': branch shape " +
                       shape_str(t->shape()) + " incompatible with " +
                       shape_str(in[0]->shape()));
    }
    total_c += t->dim(1);
  }
  TensorF out({N, total_c, H, W});
  const std::int64_t plane = static_cast<std::int64_t>(H) * W;
  for (int n = 0; n < N; ++n) {
    std::int64_t c_off = 0;
    for (const auto* t : in) {
      const int C = t->dim(1);
      const float* src = t->data() + static_cast<std::int64_t>(n) * C * plane;
      float* dst = out.data() + (static_cast<std::int64_t>(n) * total_c + c_off) * plane;
      std::copy(src, src + static_cast<std::int64_t>(C) * plane, dst);
      c_off += C;
    }
  }
  return out;
}

std::vector<TensorF> Concat::backward(const TensorF& grad_out,
                                      const std::vector<const TensorF*>& in,
                                      const TensorF&, const NodeCtx&,
                                      const std::vector<bool>& need_input_grad,
                                      ParamGradMap&) {
  const int N = in[0]->dim(0), H = in[0]->dim(2), W = in[0]->dim(3);
  const int total_c = grad_out.dim(1);
  const std::int64_t plane = static_cast<std::int64_t>(H) * W;
  std::vector<TensorF> gin(in.size());
  std::int64_t c_off = 0;
  for (std::size_t b = 0; b < in.size(); ++b) {
    const int C = in[b]->dim(1);
    if (need_input_grad[b]) {
      TensorF g(in[b]->shape());
      for (int n = 0; n < N; ++n) {
        const float* src =
            grad_out.data() + (static_cast<std::int64_t>(n) * total_c + c_off) * plane;
        float* dst = g.data() + static_cast<std::int64_t>(n) * C * plane;
        std::copy(src, src + static_cast<std::int64_t>(C) * plane, dst);
      }
      gin[b] = std::move(g);
    }
    c_off += C;
  }
  return gin;
}

}  // namespace pmw::layers

namespace pmw::layers {

namespace {

void require_4d(const std::vector<int>& s, const std::string& who) {
  if (s.size() != 4) {
    throw ShapeError(who + ": expected 4-D input, got " + shape_str(s));
  }
}

}  // namespace

std::vector<int> Conv2d::output_shape(
    const std::vector<std::vector<int>>& in) const {
  require_4d(in[0], name_);
  if (in[0][1] != in_channels_) {
    throw ShapeError(name_ + ": input channels (" + std::to_string(in[0][1]) +
                     ") != expected (" + std::to_string(in_channels_) + ")");
  }
  return {in[0][0], out_channels_,
          ops::conv_out_dim(in[0][2], spec_.kh, spec_.sh, spec_.ph),
          ops::conv_out_dim(in[0][3], spec_.kw, spec_.sw, spec_.pw)};
}

std::vector<int> Dense::output_shape(
    const std::vector<std::vector<int>>& in) const {
  if (in[0].size() != 2 || in[0][1] != in_dim_) {
    throw ShapeError(name_ + ": expected input [N," + std::to_string(in_dim_) +
                     "], got " + shape_str(in[0]));
  }
  return {in[0][0], out_dim_};
}

std::vector<int> Relu::output_shape(
    const std::vector<std::vector<int>>& in) const {
  return in[0];
}

std::vector<int> Sigmoid::output_shape(
    const std::vector<std::vector<int>>& in) const {
  return in[0];
}

std::vector<int> MaxPool2d::output_shape(
    const std::vector<std::vector<int>>& in) const {
  require_4d(in[0], name_);
  return {in[0][0], in[0][1],
          ops::conv_out_dim(in[0][2], spec_.kh, spec_.sh, spec_.ph),
          ops::conv_out_dim(in[0][3], spec_.kw, spec_.sw, spec_.pw)};
}

std::vector<int> AvgPool2d::output_shape(
    const std::vector<std::vector<int>>& in) const {
  require_4d(in[0], name_);
  return {in[0][0], in[0][1],
          ops::conv_out_dim(in[0][2], spec_.kh, spec_.sh, spec_.ph),
          ops::conv_out_dim(in[0][3], spec_.kw, spec_.sw, spec_.pw)};
}

std::vector<int> GlobalAvgPool::output_shape(
    const std::vector<std::vector<int>>& in) const {
  require_4d(in[0], name_);
  return {in[0][0], in[0][1]};
}

std::vector<int> Flatten::output_shape(
    const std::vector<std::vector<int>>& in) const {
  if (in[0].size() < 2) {
    throw ShapeError(name_ + ": input rank must be >= 2");
  }
  int rest = 1;
  for (std::size_t i = 1; i < in[0].size(); ++i) rest *= in[0][i];
  return {in[0][0], rest};
}

std::vector<int> BatchNorm2d::output_shape(
    const std::vector<std::vector<int>>& in) const {
  require_4d(in[0], name_);
  if (in[0][1] != channels_) {
    throw ShapeError(name_ + ": input channels (" + std::to_string(in[0][1]) +
                     ") != expected (" + std::to_string(channels_) + ")");
  }
  return in[0];
}

std::vector<int> Dropout::output_shape(
    const std::vector<std::vector<int>>& in) const {
  return in[0];
}

std::vector<int> Add::output_shape(
    const std::vector<std::vector<int>>& in) const {
  if (in[0] != in[1]) {
    throw ShapeError(name_ + ": shortcut shape " + shape_str(in[1]) +
                     " does not match trunk shape " + shape_str(in[0]) +
                     " (projection needed)");
  }
  return in[0];
}

std::vector<int> Concat::output_shape(
    const std::vector<std::vector<int>>& in) const {
  require_4d(in[0], name_);
  int channels = 0;
  for (const auto& s : in) {
    require_4d(s, name_);
    if (s[0] != in[0][0] || s[2] != in[0][2] || s[3] != in[0][3]) {
      throw ShapeError(name_ + ": branch shape " + shape_str(s) +
                       " incompatible with " + shape_str(in[0]));
    }
    channels += s[1];
  }
  return {in[0][0], channels, in[0][2], in[0][3]};
}

}  // namespace pmw::layers
