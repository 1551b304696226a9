#include "pmw/graph.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace pmw {

void Node::accumulate_param_grad(const Param& p, TensorF&& g,
                                 ParamGradMap& grads) const {
  auto it = grads.find(p.name);
  if (it == grads.end()) {
    grads.emplace(p.name, std::move(g));
    return;
  }
  TensorF& dst = it->second;
  for (std::int64_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

void ModelGraph::add(std::unique_ptr<Node> node) {
  for (const auto& n : nodes_) {
    if (n->name() == node->name()) {
      throw ShapeError("graph: duplicate node name '" + node->name() + "'");
    }
  }
  if (node->name() == kInputName) {
    throw ShapeError("graph: node name 'input' is reserved");
  }
  nodes_.push_back(std::move(node));
  finalized_ = false;
}

void ModelGraph::finalize() {
  if (finalized_) return;
  if (nodes_.empty()) throw ShapeError("graph: no nodes");

  std::unordered_map<std::string, int> by_name;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    by_name[nodes_[i]->name()] = static_cast<int>(i);
  }
  std::unordered_set<std::string> param_names;
  for (const auto& n : nodes_) {
    for (const auto& p : n->params()) {
      if (!param_names.insert(p.name).second) {
        throw ShapeError("graph: duplicate parameter name '" + p.name + "'");
      }
    }
  }

  input_ids_.assign(nodes_.size(), {});
  std::vector<int> consumers(nodes_.size(), 0);
  int input_consumers = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (const auto& in : nodes_[i]->input_names()) {
      if (in == kInputName) {
        input_ids_[i].push_back(-1);
        ++input_consumers;
        continue;
      }
      auto it = by_name.find(in);
      if (it == by_name.end()) {
        throw ShapeError("graph: node '" + nodes_[i]->name() +
                         "' consumes unknown node '" + in + "'");
      }
      input_ids_[i].push_back(it->second);
      ++consumers[static_cast<std::size_t>(it->second)];
    }
  }
  if (input_consumers != 1) {
    throw ShapeError("graph: expected exactly one node reading the graph input, found " +
                     std::to_string(input_consumers));
  }

  // Kahn topological sort; also proves acyclicity.
  std::vector<int> pending(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (int id : input_ids_[i]) {
      if (id >= 0) ++pending[i];
    }
  }
  std::vector<std::vector<int>> out_edges(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (int id : input_ids_[i]) {
      if (id >= 0) out_edges[static_cast<std::size_t>(id)].push_back(static_cast<int>(i));
    }
  }
  topo_.clear();
  std::vector<int> ready;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (pending[i] == 0) ready.push_back(static_cast<int>(i));
  }
  while (!ready.empty()) {
    const int cur = ready.back();
    ready.pop_back();
    topo_.push_back(cur);
    for (int nxt : out_edges[static_cast<std::size_t>(cur)]) {
      if (--pending[static_cast<std::size_t>(nxt)] == 0) ready.push_back(nxt);
    }
  }
  if (topo_.size() != nodes_.size()) {
    throw ShapeError("graph: cycle detected");
  }

  output_id_ = -1;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (consumers[i] == 0) {
      if (output_id_ >= 0) {
        throw ShapeError("graph: multiple output nodes ('" +
                         nodes_[static_cast<std::size_t>(output_id_)]->name() +
                         "' and '" + nodes_[i]->name() + "')");
      }
      output_id_ = static_cast<int>(i);
    }
  }
  if (output_id_ < 0) throw ShapeError("graph: no output node");
  finalized_ = true;
}

void ModelGraph::require_finalized() const {
  if (!finalized_) {
    throw ShapeError("graph: finalize() must run before this operation");
  }
}

Node* ModelGraph::find_node(const std::string& name) {
  for (auto& n : nodes_) {
    if (n->name() == name) return n.get();
  }
  return nullptr;
}

const std::string& ModelGraph::output_name() const {
  require_finalized();
  return nodes_[static_cast<std::size_t>(output_id_)]->name();
}

std::vector<int> ModelGraph::infer_output_shape(
    const std::vector<int>& input_shape) {
  finalize();
  std::vector<std::vector<int>> shapes(nodes_.size());
  std::vector<std::vector<int>> in_shapes;
  for (int id : topo_) {
    in_shapes.clear();
    for (int s : input_ids_[static_cast<std::size_t>(id)]) {
      in_shapes.push_back(s < 0 ? input_shape : shapes[static_cast<std::size_t>(s)]);
    }
    shapes[static_cast<std::size_t>(id)] =
        nodes_[static_cast<std::size_t>(id)]->output_shape(in_shapes);
  }
  return shapes[static_cast<std::size_t>(output_id_)];
}

std::vector<int> ModelGraph::infer_output_shape() {
  if (input_chw_.size() != 3) {
    throw ShapeError("graph: input shape unknown; set_input_chw first");
  }
  return infer_output_shape({1, input_chw_[0], input_chw_[1], input_chw_[2]});
}

TensorF ModelGraph::forward(const TensorF& input, Mode mode, Rng* rng,
                            Tape* tape) {
  finalize();
  std::vector<TensorF> local;
  std::vector<TensorF>* outputs = &local;
  if (tape) {
    tape->input = input;
    tape->outputs.clear();
    tape->ctx.assign(nodes_.size(), {});
    tape->param_grads.clear();
    outputs = &tape->outputs;
  }
  outputs->assign(nodes_.size(), {});

  std::vector<const TensorF*> in_ptrs;
  for (int id : topo_) {
    const auto& srcs = input_ids_[static_cast<std::size_t>(id)];
    in_ptrs.clear();
    for (int s : srcs) {
      in_ptrs.push_back(s < 0 ? &input : &(*outputs)[static_cast<std::size_t>(s)]);
    }
    NodeCtx* ctx = tape ? &tape->ctx[static_cast<std::size_t>(id)] : nullptr;
    (*outputs)[static_cast<std::size_t>(id)] =
        nodes_[static_cast<std::size_t>(id)]->forward(in_ptrs, mode, rng, ctx);
  }
  return (*outputs)[static_cast<std::size_t>(output_id_)];
}

namespace {

void add_into(TensorF& dst, TensorF&& src) {
  if (dst.empty()) {
    dst = std::move(src);
    return;
  }
  if (!dst.same_shape(src)) {
    throw ShapeError("graph backward: gradient shape mismatch " +
                     shape_str(dst.shape()) + " vs " + shape_str(src.shape()));
  }
  for (std::int64_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

void ModelGraph::backward(Tape& tape, const TensorF& grad_output) {
  require_finalized();
  if (tape.outputs.size() != nodes_.size()) {
    throw ShapeError("graph backward: tape does not match this graph");
  }

  // A node participates iff an unfrozen parameter sits in it or upstream.
  std::vector<bool> needs(nodes_.size(), false);
  for (int id : topo_) {
    bool flag = false;
    for (const auto& p : nodes_[static_cast<std::size_t>(id)]->params()) {
      if (!p.frozen) {
        flag = true;
        break;
      }
    }
    if (!flag) {
      for (int s : input_ids_[static_cast<std::size_t>(id)]) {
        if (s >= 0 && needs[static_cast<std::size_t>(s)]) {
          flag = true;
          break;
        }
      }
    }
    needs[static_cast<std::size_t>(id)] = flag;
  }

  std::vector<TensorF> gacc(nodes_.size());
  gacc[static_cast<std::size_t>(output_id_)] = grad_output;

  std::vector<const TensorF*> in_ptrs;
  std::vector<bool> need_in;
  for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
    const int id = *it;
    if (!needs[static_cast<std::size_t>(id)]) continue;
    TensorF& gout = gacc[static_cast<std::size_t>(id)];
    if (gout.empty()) continue;  // dead branch

    const auto& srcs = input_ids_[static_cast<std::size_t>(id)];
    in_ptrs.clear();
    need_in.clear();
    for (int s : srcs) {
      in_ptrs.push_back(s < 0 ? &tape.input : &tape.outputs[static_cast<std::size_t>(s)]);
      need_in.push_back(s >= 0 && needs[static_cast<std::size_t>(s)]);
    }
    auto gin = nodes_[static_cast<std::size_t>(id)]->backward(
        gout, in_ptrs, tape.outputs[static_cast<std::size_t>(id)],
        tape.ctx[static_cast<std::size_t>(id)], need_in, tape.param_grads);
    if (gin.size() != srcs.size()) {
      throw ShapeError("graph backward: node '" +
                       nodes_[static_cast<std::size_t>(id)]->name() +
                       "' returned wrong gradient count");
    }
    for (std::size_t j = 0; j < srcs.size(); ++j) {
      if (srcs[j] >= 0 && need_in[j]) {
        add_into(gacc[static_cast<std::size_t>(srcs[j])], std::move(gin[j]));
      }
    }
    gout = TensorF();  // release
  }
}

std::vector<Param*> ModelGraph::parameters() {
  std::vector<Param*> out;
  for (auto& n : nodes_) {
    for (auto& p : n->params()) out.push_back(&p);
  }
  return out;
}

std::vector<const Param*> ModelGraph::parameters() const {
  std::vector<const Param*> out;
  for (const auto& n : nodes_) {
    for (const auto& p : n->params()) out.push_back(&p);
  }
  return out;
}

std::vector<Buffer*> ModelGraph::buffer_tensors() {
  std::vector<Buffer*> out;
  for (auto& n : nodes_) {
    for (auto& b : n->buffers()) out.push_back(&b);
  }
  return out;
}

std::vector<const Buffer*> ModelGraph::buffer_tensors() const {
  std::vector<const Buffer*> out;
  for (const auto& n : nodes_) {
    for (const auto& b : n->buffers()) out.push_back(&b);
  }
  return out;
}

Param* ModelGraph::find_param(const std::string& name) {
  for (auto& n : nodes_) {
    for (auto& p : n->params()) {
      if (p.name == name) return &p;
    }
  }
  return nullptr;
}

int ModelGraph::freeze_if(const std::function<bool(const std::string&)>& pred) {
  int matched = 0;
  for (auto* p : parameters()) {
    if (pred(p->name)) {
      p->frozen = true;
      ++matched;
    }
  }
  return matched;
}

int ModelGraph::freeze_prefix(const std::string& prefix) {
  return freeze_if([&](const std::string& name) {
    return name.rfind(prefix, 0) == 0;
  });
}

void ModelGraph::unfreeze_all() {
  for (auto* p : parameters()) p->frozen = false;
}

double ModelGraph::frozen_fraction() const {
  const auto ps = parameters();
  if (ps.empty()) return 0.0;
  std::size_t frozen = 0;
  for (const auto* p : ps) {
    if (p->frozen) ++frozen;
  }
  return static_cast<double>(frozen) / static_cast<double>(ps.size());
}

bool ModelGraph::any_node_has_prefix(const std::string& prefix) const {
  for (const auto& n : nodes_) {
    if (n->name().rfind(prefix, 0) == 0) return true;
  }
  return false;
}

void ModelGraph::remove_nodes_with_prefix(const std::string& prefix) {
  std::unordered_set<std::string> dead;
  for (const auto& n : nodes_) {
    if (n->name().rfind(prefix, 0) == 0) dead.insert(n->name());
  }
  if (dead.empty()) return;
  for (const auto& n : nodes_) {
    if (dead.count(n->name())) continue;
    for (const auto& in : n->input_names()) {
      if (dead.count(in)) {
        throw ShapeError("graph: cannot remove '" + in + "': still consumed by '" +
                         n->name() + "'");
      }
    }
  }
  std::erase_if(nodes_, [&](const std::unique_ptr<Node>& n) {
    return dead.count(n->name()) > 0;
  });
  finalized_ = false;
}

namespace {

std::uint64_t checksum_tensor(std::uint64_t h, const std::string& name,
                              const TensorF& t) {
  h = fnv1a64(name.data(), name.size(), h);
  h = fnv1a64(t.data(), static_cast<std::size_t>(t.size()) * sizeof(float), h);
  return h;
}

}  // namespace

std::uint64_t ModelGraph::content_checksum() const {
  return content_checksum_prefix("");
}

std::uint64_t ModelGraph::content_checksum_prefix(const std::string& prefix) const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& n : nodes_) {
    for (const auto& p : n->params()) {
      if (p.name.rfind(prefix, 0) == 0) h = checksum_tensor(h, p.name, p.value);
    }
    for (const auto& b : n->buffers()) {
      if (b.name.rfind(prefix, 0) == 0) h = checksum_tensor(h, b.name, b.value);
    }
  }
  return h;
}

}  // namespace pmw
