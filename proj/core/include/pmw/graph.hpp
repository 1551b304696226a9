#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pmw/ops.hpp"
#include "pmw/rng.hpp"
#include "pmw/tensor.hpp"

namespace pmw {

// Named trainable tensor. Frozen params are excluded from gradient
// computation and optimizer updates.
struct Param {
  std::string name;
  TensorF value;
  bool frozen = false;
};

// Named non-trainable state (batchnorm running stats). Serialized alongside
// params, never receives gradients.
struct Buffer {
  std::string name;
  TensorF value;
};

// Saved per-node state from a recorded forward pass.
struct NodeCtx {
  std::vector<std::int64_t> argmax;     // maxpool winners
  std::vector<std::uint8_t> mask;       // dropout keep mask
  ops::BatchNormCtx<float> bn;
};

using ParamGradMap = std::map<std::string, TensorF>;

// Recorded forward pass: every node's output plus whatever each node saved
// for its backward. After ModelGraph::backward the parameter gradients are
// keyed here by parameter name; frozen parameters never appear.
struct Tape {
  TensorF input;
  std::vector<TensorF> outputs;  // by node index
  std::vector<NodeCtx> ctx;      // by node index
  ParamGradMap param_grads;
};

class Node {
 public:
  Node(std::string name, std::vector<std::string> inputs)
      : name_(std::move(name)), input_names_(std::move(inputs)) {}
  virtual ~Node() = default;

  virtual const char* kind() const = 0;
  const std::string& name() const { return name_; }
  const std::vector<std::string>& input_names() const { return input_names_; }

  // Static shape math, one entry per input (batch dim included). Lets
  // builders wire dimension-dependent layers without running data through.
  virtual std::vector<int> output_shape(
      const std::vector<std::vector<int>>& in) const = 0;

  virtual TensorF forward(const std::vector<const TensorF*>& in, Mode mode,
                          Rng* rng, NodeCtx* ctx) = 0;
  // grad_out: d(loss)/d(output). Returns one gradient per input; entries with
  // need_input_grad[i] == false come back empty. Unfrozen parameter gradients
  // are accumulated into `grads`.
  virtual std::vector<TensorF> backward(const TensorF& grad_out,
                                        const std::vector<const TensorF*>& in,
                                        const TensorF& out, const NodeCtx& ctx,
                                        const std::vector<bool>& need_input_grad,
                                        ParamGradMap& grads) = 0;

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::vector<Buffer>& buffers() { return buffers_; }
  const std::vector<Buffer>& buffers() const { return buffers_; }

 protected:
  void accumulate_param_grad(const Param& p, TensorF&& g, ParamGradMap& grads) const;

  std::string name_;
  std::vector<std::string> input_names_;
  std::vector<Param> params_;
  std::vector<Buffer> buffers_;
};

// Directed acyclic composition of layer nodes with a single external input
// (referenced as ModelGraph::kInputName) and a single output node (the unique
// node nothing consumes). Node and parameter names are unique.
class ModelGraph {
 public:
  static constexpr const char* kInputName = "input";

  ModelGraph() = default;
  ModelGraph(ModelGraph&&) = default;
  ModelGraph& operator=(ModelGraph&&) = default;

  void add(std::unique_ptr<Node> node);
  // Validates the DAG and computes evaluation order. Called implicitly by
  // forward/backward; explicit calls surface wiring errors early.
  void finalize();
  bool finalized() const { return finalized_; }

  std::size_t node_count() const { return nodes_.size(); }
  Node& node(std::size_t i) { return *nodes_[i]; }
  const Node& node(std::size_t i) const { return *nodes_[i]; }
  Node* find_node(const std::string& name);
  const std::string& output_name() const;

  // The [C,H,W] the graph was built for; recorded by the builders.
  void set_input_chw(std::vector<int> chw) { input_chw_ = std::move(chw); }
  const std::vector<int>& input_chw() const { return input_chw_; }
  // Walks the static shape math; input_shape includes the batch dim.
  std::vector<int> infer_output_shape(const std::vector<int>& input_shape);
  std::vector<int> infer_output_shape();  // batch 1 over input_chw

  // rng is required only when a train-mode forward hits a stochastic node.
  TensorF forward(const TensorF& input, Mode mode, Rng* rng = nullptr,
                  Tape* tape = nullptr);
  // Fills tape.param_grads for every unfrozen parameter reachable from the
  // loss. The graph input itself receives no gradient.
  void backward(Tape& tape, const TensorF& grad_output);

  std::vector<Param*> parameters();
  std::vector<const Param*> parameters() const;
  std::vector<Buffer*> buffer_tensors();
  std::vector<const Buffer*> buffer_tensors() const;
  Param* find_param(const std::string& name);

  int freeze_if(const std::function<bool(const std::string&)>& pred);
  int freeze_prefix(const std::string& prefix);
  void unfreeze_all();
  // frozen tensors / total tensors
  double frozen_fraction() const;

  bool any_node_has_prefix(const std::string& prefix) const;
  // Drops the named nodes; surviving nodes must not consume them.
  void remove_nodes_with_prefix(const std::string& prefix);

  // Checksum over all parameter and buffer names+bytes, in graph order.
  std::uint64_t content_checksum() const;
  std::uint64_t content_checksum_prefix(const std::string& prefix) const;

 private:
  void require_finalized() const;

  std::vector<std::unique_ptr<Node>> nodes_;
  std::vector<std::vector<int>> input_ids_;  // -1 = graph input
  std::vector<int> topo_;                    // evaluation order
  std::vector<int> input_chw_;
  int output_id_ = -1;
  bool finalized_ = false;
};

}  // namespace pmw
