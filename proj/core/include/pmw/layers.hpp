#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pmw/graph.hpp"
#include "pmw/ops.hpp"

namespace pmw::layers {

// Weights are zero-initialized here; builders apply the seeded init scheme.
class Conv2d : public Node {
 public:
  Conv2d(std::string name, std::string input, int in_channels, int out_channels,
         ops::ConvSpec spec, bool with_bias = true);
  const char* kind() const override { return "conv2d"; }
  std::vector<int> output_shape(
      const std::vector<std::vector<int>>& in) const override;
  TensorF forward(const std::vector<const TensorF*>& in, Mode mode, Rng* rng,
                  NodeCtx* ctx) override;
  std::vector<TensorF> backward(const TensorF& grad_out,
                                const std::vector<const TensorF*>& in,
                                const TensorF& out, const NodeCtx& ctx,
                                const std::vector<bool>& need_input_grad,
                                ParamGradMap& grads) override;
  const ops::ConvSpec& spec() const { return spec_; }
  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }

 private:
  ops::ConvSpec spec_;
  int in_channels_, out_channels_;
  bool with_bias_;
};

class Dense : public Node {
 public:
  Dense(std::string name, std::string input, int in_dim, int out_dim);
  const char* kind() const override { return "dense"; }
  std::vector<int> output_shape(
      const std::vector<std::vector<int>>& in) const override;
  TensorF forward(const std::vector<const TensorF*>& in, Mode mode, Rng* rng,
                  NodeCtx* ctx) override;
  std::vector<TensorF> backward(const TensorF& grad_out,
                                const std::vector<const TensorF*>& in,
                                const TensorF& out, const NodeCtx& ctx,
                                const std::vector<bool>& need_input_grad,
                                ParamGradMap& grads) override;
  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }

 private:
  int in_dim_, out_dim_;
};

class Relu : public Node {
 public:
  Relu(std::string name, std::string input)
      : Node(std::move(name), {std::move(input)}) {}
  const char* kind() const override { return "relu"; }
  std::vector<int> output_shape(
      const std::vector<std::vector<int>>& in) const override;
  TensorF forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                  NodeCtx*) override;
  std::vector<TensorF> backward(const TensorF& grad_out,
                                const std::vector<const TensorF*>& in,
                                const TensorF&, const NodeCtx&,
                                const std::vector<bool>& need_input_grad,
                                ParamGradMap&) override;
};

class Sigmoid : public Node {
 public:
  Sigmoid(std::string name, std::string input)
      : Node(std::move(name), {std::move(input)}) {}
  const char* kind() const override { return "sigmoid"; }
  std::vector<int> output_shape(
      const std::vector<std::vector<int>>& in) const override;
  TensorF forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                  NodeCtx*) override;
  std::vector<TensorF> backward(const TensorF& grad_out,
                                const std::vector<const TensorF*>& in,
                                const TensorF& out, const NodeCtx&,
                                const std::vector<bool>& need_input_grad,
                                ParamGradMap&) override;
};

class MaxPool2d : public Node {
 public:
  MaxPool2d(std::string name, std::string input, ops::PoolSpec spec)
      : Node(std::move(name), {std::move(input)}), spec_(spec) {}
  const char* kind() const override { return "maxpool2d"; }
  std::vector<int> output_shape(
      const std::vector<std::vector<int>>& in) const override;
  TensorF forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                  NodeCtx* ctx) override;
  std::vector<TensorF> backward(const TensorF& grad_out,
                                const std::vector<const TensorF*>& in,
                                const TensorF&, const NodeCtx& ctx,
                                const std::vector<bool>& need_input_grad,
                                ParamGradMap&) override;

 private:
  ops::PoolSpec spec_;
};

class AvgPool2d : public Node {
 public:
  AvgPool2d(std::string name, std::string input, ops::PoolSpec spec)
      : Node(std::move(name), {std::move(input)}), spec_(spec) {}
  const char* kind() const override { return "avgpool2d"; }
  std::vector<int> output_shape(
      const std::vector<std::vector<int>>& in) const override;
  TensorF forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                  NodeCtx*) override;
  std::vector<TensorF> backward(const TensorF& grad_out,
                                const std::vector<const TensorF*>& in,
                                const TensorF&, const NodeCtx&,
                                const std::vector<bool>& need_input_grad,
                                ParamGradMap&) override;

 private:
  ops::PoolSpec spec_;
};

class GlobalAvgPool : public Node {
 public:
  GlobalAvgPool(std::string name, std::string input)
      : Node(std::move(name), {std::move(input)}) {}
  const char* kind() const override { return "global_avg_pool"; }
  std::vector<int> output_shape(
      const std::vector<std::vector<int>>& in) const override;
  TensorF forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                  NodeCtx*) override;
  std::vector<TensorF> backward(const TensorF& grad_out,
                                const std::vector<const TensorF*>& in,
                                const TensorF&, const NodeCtx&,
                                const std::vector<bool>& need_input_grad,
                                ParamGradMap&) override;
};

// [N, ...] -> [N, product of the rest]
class Flatten : public Node {
 public:
  Flatten(std::string name, std::string input)
      : Node(std::move(name), {std::move(input)}) {}
  const char* kind() const override { return "flatten"; }
  std::vector<int> output_shape(
      const std::vector<std::vector<int>>& in) const override;
  TensorF forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                  NodeCtx*) override;
  std::vector<TensorF> backward(const TensorF& grad_out,
                                const std::vector<const TensorF*>& in,
                                const TensorF&, const NodeCtx&,
                                const std::vector<bool>& need_input_grad,
                                ParamGradMap&) override;
};

// When every parameter of this layer is frozen it runs in inference mode
// regardless of the requested mode: the running stats are used as-is and not
// updated, so a frozen backbone stays bit-identical through fine-tuning.
class BatchNorm2d : public Node {
 public:
  BatchNorm2d(std::string name, std::string input, int channels,
              float momentum = 0.9f, float eps = 1e-5f);
  const char* kind() const override { return "batchnorm2d"; }
  std::vector<int> output_shape(
      const std::vector<std::vector<int>>& in) const override;
  TensorF forward(const std::vector<const TensorF*>& in, Mode mode, Rng*,
                  NodeCtx* ctx) override;
  std::vector<TensorF> backward(const TensorF& grad_out,
                                const std::vector<const TensorF*>& in,
                                const TensorF&, const NodeCtx& ctx,
                                const std::vector<bool>& need_input_grad,
                                ParamGradMap& grads) override;

 private:
  int channels_;
  float momentum_, eps_;
};

class Dropout : public Node {
 public:
  Dropout(std::string name, std::string input, float rate);
  const char* kind() const override { return "dropout"; }
  std::vector<int> output_shape(
      const std::vector<std::vector<int>>& in) const override;
  TensorF forward(const std::vector<const TensorF*>& in, Mode mode, Rng* rng,
                  NodeCtx* ctx) override;
  std::vector<TensorF> backward(const TensorF& grad_out,
                                const std::vector<const TensorF*>& in,
                                const TensorF&, const NodeCtx& ctx,
                                const std::vector<bool>& need_input_grad,
                                ParamGradMap&) override;
  float rate() const { return rate_; }

 private:
  float rate_;
};

// Elementwise sum of two equally-shaped inputs (residual merge).
class Add : public Node {
 public:
  Add(std::string name, std::string lhs, std::string rhs)
      : Node(std::move(name), {std::move(lhs), std::move(rhs)}) {}
  const char* kind() const override { return "add"; }
  std::vector<int> output_shape(
      const std::vector<std::vector<int>>& in) const override;
  TensorF forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                  NodeCtx*) override;
  std::vector<TensorF> backward(const TensorF& grad_out,
                                const std::vector<const TensorF*>& in,
                                const TensorF&, const NodeCtx&,
                                const std::vector<bool>& need_input_grad,
                                ParamGradMap&) override;
};

// Channel-axis concatenation of [N,C_i,H,W] inputs (inception merge).
class Concat : public Node {
 public:
  Concat(std::string name, std::vector<std::string> inputs)
      : Node(std::move(name), std::move(inputs)) {}
  const char* kind() const override { return "concat"; }
  std::vector<int> output_shape(
      const std::vector<std::vector<int>>& in) const override;
  TensorF forward(const std::vector<const TensorF*>& in, Mode, Rng*,
                  NodeCtx*) override;
  std::vector<TensorF> backward(const TensorF& grad_out,
                                const std::vector<const TensorF*>& in,
                                const TensorF&, const NodeCtx&,
                                const std::vector<bool>& need_input_grad,
                                ParamGradMap&) override;
};

}  // namespace pmw::layers
