#include "pmw/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "pmw/models.hpp"
#include "pmw/ops.hpp"
#include "pmw/serialize.hpp"

namespace pmw {

using nlohmann::json;

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sgd-momentum") return OptimizerKind::SgdMomentum;
  throw DataError("unknown optimizer '" + s + "' (expected adam|sgd-momentum)");
}

std::string to_string(OptimizerKind k) {
  return k == OptimizerKind::Adam ? "adam" : "sgd-momentum";
}

void Optimizer::step(ModelGraph& model, const ParamGradMap& grads) {
  if (cfg_.kind == OptimizerKind::Adam) ++t_;
  const double bc1 = cfg_.kind == OptimizerKind::Adam
                         ? 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_))
                         : 1.0;
  const double bc2 = cfg_.kind == OptimizerKind::Adam
                         ? 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_))
                         : 1.0;

  for (const auto& [name, grad] : grads) {
    Param* p = model.find_param(name);
    if (p == nullptr) {
      throw ShapeError("optimizer: gradient for unknown parameter '" + name + "'");
    }
    if (p->frozen) continue;
    if (!p->value.same_shape(grad)) {
      throw ShapeError("optimizer: gradient shape mismatch for '" + name + "'");
    }
    const std::size_t n = static_cast<std::size_t>(grad.size());
    if (cfg_.kind == OptimizerKind::Adam) {
      auto& m = m_[name];
      auto& v = v_[name];
      if (m.size() != n) m.assign(n, 0.0f);
      if (v.size() != n) v.assign(n, 0.0f);
      const float b1 = static_cast<float>(cfg_.beta1);
      const float b2 = static_cast<float>(cfg_.beta2);
      for (std::size_t i = 0; i < n; ++i) {
        const float g = grad[static_cast<std::int64_t>(i)];
        m[i] = b1 * m[i] + (1.0f - b1) * g;
        v[i] = b2 * v[i] + (1.0f - b2) * g * g;
        const double mhat = static_cast<double>(m[i]) / bc1;
        const double vhat = static_cast<double>(v[i]) / bc2;
        p->value[static_cast<std::int64_t>(i)] -=
            static_cast<float>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    } else {
      auto& vel = m_[name];
      if (vel.size() != n) vel.assign(n, 0.0f);
      const float mu = static_cast<float>(cfg_.momentum);
      const float lr = static_cast<float>(cfg_.lr);
      for (std::size_t i = 0; i < n; ++i) {
        vel[i] = mu * vel[i] + grad[static_cast<std::int64_t>(i)];
        p->value[static_cast<std::int64_t>(i)] -= lr * vel[i];
      }
    }
  }
}

std::string Optimizer::state_json() const {
  json j{{"kind", to_string(cfg_.kind)}, {"t", t_}};
  json jm = json::object(), jv = json::object();
  for (const auto& [name, vals] : m_) jm[name] = vals;
  for (const auto& [name, vals] : v_) jv[name] = vals;
  j["m"] = std::move(jm);
  j["v"] = std::move(jv);
  return j.dump();
}

void Optimizer::load_state_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("kind").get<std::string>() != to_string(cfg_.kind)) {
    throw DataError("optimizer state kind mismatch");
  }
  t_ = j.at("t").get<std::int64_t>();
  m_.clear();
  v_.clear();
  for (const auto& [name, vals] : j.at("m").items()) {
    m_[name] = vals.get<std::vector<float>>();
  }
  for (const auto& [name, vals] : j.at("v").items()) {
    v_[name] = vals.get<std::vector<float>>();
  }
}

int best_epoch_of(const std::vector<double>& val_losses) {
  if (val_losses.empty()) return 0;
  int best = 1;
  for (std::size_t i = 1; i < val_losses.size(); ++i) {
    if (val_losses[i] < val_losses[static_cast<std::size_t>(best - 1)]) {
      best = static_cast<int>(i) + 1;
    }
  }
  return best;
}

bool should_stop(const std::vector<double>& val_losses, int patience) {
  const int best = best_epoch_of(val_losses);
  if (best == 0) return false;
  return static_cast<int>(val_losses.size()) - best > patience;
}

std::vector<std::pair<std::string, TensorF>> snapshot_state(const ModelGraph& model) {
  std::vector<std::pair<std::string, TensorF>> snap;
  for (const auto* p : model.parameters()) snap.emplace_back(p->name, p->value);
  for (const auto* b : model.buffer_tensors()) snap.emplace_back(b->name, b->value);
  return snap;
}

void restore_state(ModelGraph& model,
                   const std::vector<std::pair<std::string, TensorF>>& snapshot) {
  std::map<std::string, TensorF*> targets;
  for (auto* p : model.parameters()) targets[p->name] = &p->value;
  for (auto* b : model.buffer_tensors()) targets[b->name] = &b->value;
  for (const auto& [name, value] : snapshot) {
    auto it = targets.find(name);
    if (it == targets.end()) {
      throw ShapeError("restore_state: unknown tensor '" + name + "'");
    }
    *it->second = value;
  }
}

namespace {

void validate_binary_output(ModelGraph& model, int channels, int hw) {
  const auto out = model.infer_output_shape({2, channels, hw, hw});
  if (out.size() != 2 || out[1] != 1) {
    throw ShapeError("train: model output must be [N,1], got " + shape_str(out));
  }
  const auto& last = model.node(model.node_count() - 1);
  (void)last;
}

TensorF labels_tensor(const std::vector<float>& labels) {
  TensorF t({static_cast<int>(labels.size())}, labels);
  return t;
}

double run_epoch(ModelGraph& model, const TensorDataset& train_set,
                 const TrainConfig& cfg, Optimizer& opt, int epoch) {
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng = Rng(cfg.seed).stream("shuffle", static_cast<std::uint64_t>(epoch));
  shuffle(order, shuffle_rng);

  Rng dropout_rng = Rng(cfg.seed).stream("dropout", static_cast<std::uint64_t>(epoch));

  double loss_sum = 0;
  std::int64_t seen = 0;
  const std::size_t n = order.size();
  int batch_index = 0;
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
    const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
    std::vector<TensorF> augmented;
    std::vector<const TensorF*> images;
    std::vector<float> labels;
    for (std::size_t k = start; k < stop; ++k) {
      const std::size_t idx = order[k];
      if (cfg.augment_enabled) {
        // fresh transform per epoch: index = epoch * n + sample index
        augmented.push_back(augment(train_set.image(idx), cfg.augment, cfg.seed,
                                    static_cast<std::uint64_t>(epoch) * n + idx));
      }
      labels.push_back(train_set.label(idx));
    }
    if (cfg.augment_enabled) {
      for (const auto& img : augmented) images.push_back(&img);
    } else {
      for (std::size_t k = start; k < stop; ++k) images.push_back(&train_set.image(order[k]));
    }
    const TensorF x = stack_images(images);
    const TensorF y = labels_tensor(labels);
    const double loss = train_step(model, x, y, opt, dropout_rng);
    if (!std::isfinite(loss)) {
      throw NumericError("training diverged: non-finite loss at epoch " +
                         std::to_string(epoch) + " batch " + std::to_string(batch_index));
    }
    loss_sum += loss * static_cast<double>(stop - start);
    seen += static_cast<std::int64_t>(stop - start);
  }
  return loss_sum / static_cast<double>(seen);
}

RunHistory train_loop(ModelGraph& model, const TensorDataset& train_set,
                      const TensorDataset& val_set, const TrainConfig& cfg,
                      RunHistory history, Optimizer& opt,
                      std::vector<std::pair<std::string, TensorF>> best_snapshot) {
  const auto t0 = std::chrono::steady_clock::now();
  if (train_set.empty() || val_set.empty()) {
    throw DataError("train: train/val sets must be non-empty");
  }
  if (cfg.max_epochs < 1 || cfg.patience < 1 || cfg.batch_size < 1) {
    throw DataError("train: max_epochs, patience and batch_size must be >= 1");
  }
  const auto& shape = train_set.image(0).shape();
  validate_binary_output(model, shape[0], shape[1]);

  std::vector<double> val_losses;
  double best_loss = std::numeric_limits<double>::infinity();
  for (const auto& e : history.epochs) {
    val_losses.push_back(e.val_loss);
    if (e.val_loss < best_loss) best_loss = e.val_loss;
  }
  if (best_snapshot.empty()) best_snapshot = snapshot_state(model);

  for (int epoch = static_cast<int>(history.epochs.size()) + 1;
       epoch <= cfg.max_epochs; ++epoch) {
    EpochStats stats;
    stats.train_loss = run_epoch(model, train_set, cfg, opt, epoch);
    const EvalResult val = evaluate(model, val_set, cfg.batch_size);
    stats.val_loss = val.loss;
    stats.val_accuracy = val.accuracy;
    history.epochs.push_back(stats);
    val_losses.push_back(stats.val_loss);

    if (stats.val_loss < best_loss) {  // ties keep the earlier epoch
      best_loss = stats.val_loss;
      best_snapshot = snapshot_state(model);
    }
    if (cfg.verbose) {
      std::fprintf(stderr, "epoch %3d  train_loss %.4f  val_loss %.4f  val_acc %.4f\n",
                   epoch, stats.train_loss, stats.val_loss, stats.val_accuracy);
    }
    if (!cfg.checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
        epoch % cfg.checkpoint_every == 0) {
      RunHistory partial = history;
      partial.best_epoch = best_epoch_of(val_losses);
      partial.stopped_epoch = epoch;
      save_checkpoint(cfg.checkpoint_dir, model, best_snapshot, opt, partial, cfg);
    }
    if (should_stop(val_losses, cfg.patience)) break;
  }

  restore_state(model, best_snapshot);
  history.best_epoch = best_epoch_of(val_losses);
  history.stopped_epoch = static_cast<int>(history.epochs.size());
  history.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return history;
}

}  // namespace

RunHistory train(ModelGraph& model, const TensorDataset& train_set,
                 const TensorDataset& val_set, const TrainConfig& cfg) {
  if (!cfg.freeze_prefix.empty()) models::freeze(model, cfg.freeze_prefix);
  Optimizer opt(cfg.optimizer);
  return train_loop(model, train_set, val_set, cfg, RunHistory{}, opt, {});
}

RunHistory train_resume(ModelGraph& model, const TensorDataset& train_set,
                        const TensorDataset& val_set, const TrainConfig& cfg,
                        RunHistory initial, Optimizer& opt,
                        std::vector<std::pair<std::string, TensorF>> best_snapshot) {
  if (!cfg.freeze_prefix.empty()) models::freeze(model, cfg.freeze_prefix);
  return train_loop(model, train_set, val_set, cfg, std::move(initial), opt,
                    std::move(best_snapshot));
}

double train_step(ModelGraph& model, const TensorF& x, const TensorF& y,
                  Optimizer& opt, Rng& rng) {
  Tape tape;
  const TensorF probs = model.forward(x, Mode::Train, &rng, &tape);
  const double loss = ops::bce_loss(probs, y);
  const TensorF dprobs = ops::bce_loss_backward(probs, y);
  model.backward(tape, dprobs);
  opt.step(model, tape.param_grads);
  return loss;
}

EvalResult evaluate(ModelGraph& model, const TensorDataset& ds, int batch_size) {
  if (ds.empty()) throw DataError("evaluate: empty dataset");
  EvalResult result;
  result.probs = TensorF({static_cast<int>(ds.size()), 1});
  double loss_sum = 0;
  std::int64_t correct = 0;
  for (std::size_t start = 0; start < ds.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(ds.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const TensorF*> images;
    std::vector<float> labels;
    for (std::size_t i = start; i < stop; ++i) {
      images.push_back(&ds.image(i));
      labels.push_back(ds.label(i));
    }
    const TensorF x = stack_images(images);
    const TensorF y = labels_tensor(labels);
    const TensorF probs = model.forward(x, Mode::Infer);
    loss_sum += ops::bce_loss(probs, y) * static_cast<double>(stop - start);
    for (std::size_t i = start; i < stop; ++i) {
      const float p = probs[static_cast<std::int64_t>(i - start)];
      result.probs[static_cast<std::int64_t>(i)] = p;
      const bool predicted = p >= 0.5f;
      if (predicted == (ds.label(i) >= 0.5f)) ++correct;
    }
  }
  result.loss = loss_sum / static_cast<double>(ds.size());
  result.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
  return result;
}

void save_history_jsonl(const RunHistory& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    const auto& e = h.epochs[i];
    json j{{"epoch", i + 1},
           {"train_loss", e.train_loss},
           {"val_loss", e.val_loss},
           {"val_accuracy", e.val_accuracy}};
    if (static_cast<int>(i + 1) == h.best_epoch) j["best"] = true;
    out << j.dump() << "\n";
  }
  json tail{{"best_epoch", h.best_epoch}, {"stopped_epoch", h.stopped_epoch}};
  out << tail.dump() << "\n";
}

RunHistory load_history_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  RunHistory h;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.contains("epoch")) {
      EpochStats e;
      e.train_loss = j.at("train_loss").get<double>();
      e.val_loss = j.at("val_loss").get<double>();
      e.val_accuracy = j.at("val_accuracy").get<double>();
      h.epochs.push_back(e);
    } else {
      h.best_epoch = j.value("best_epoch", 0);
      h.stopped_epoch = j.value("stopped_epoch", 0);
    }
  }
  return h;
}

std::string train_config_json(const TrainConfig& cfg) {
  json j{{"max_epochs", cfg.max_epochs},
         {"patience", cfg.patience},
         {"batch_size", cfg.batch_size},
         {"seed", cfg.seed},
         {"augment_enabled", cfg.augment_enabled},
         {"freeze_prefix", cfg.freeze_prefix},
         {"optimizer",
          {{"kind", to_string(cfg.optimizer.kind)},
           {"lr", cfg.optimizer.lr},
           {"beta1", cfg.optimizer.beta1},
           {"beta2", cfg.optimizer.beta2},
           {"eps", cfg.optimizer.eps},
           {"momentum", cfg.optimizer.momentum}}},
         {"augment",
          {{"rotation_deg", cfg.augment.rotation_deg},
           {"zoom_min", cfg.augment.zoom_min},
           {"zoom_max", cfg.augment.zoom_max},
           {"hflip_prob", cfg.augment.hflip_prob}}}};
  return j.dump(2);
}

void save_checkpoint(const std::filesystem::path& dir, const ModelGraph& model,
                     const std::vector<std::pair<std::string, TensorF>>& best_snapshot,
                     const Optimizer& opt, const RunHistory& history,
                     const TrainConfig& cfg) {
  std::filesystem::create_directories(dir);
  save_weights(model, dir / "weights.bin");

  std::vector<std::pair<std::string, const TensorF*>> best;
  for (const auto& [name, value] : best_snapshot) best.emplace_back(name, &value);
  save_named_tensors(best, dir / "best_weights.bin");

  json epochs = json::array();
  for (const auto& e : history.epochs) {
    epochs.push_back(json{{"train_loss", e.train_loss},
                          {"val_loss", e.val_loss},
                          {"val_accuracy", e.val_accuracy}});
  }
  json j{{"checkpoint_version", 1},
         {"seed", cfg.seed},
         {"config", json::parse(train_config_json(cfg))},
         {"history", epochs},
         {"optimizer", json::parse(opt.state_json())}};
  std::ofstream out(dir / "state.json", std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw DataError("cannot write checkpoint state");
}

ResumedState resume_checkpoint(const std::filesystem::path& dir, ModelGraph& model) {
  load_weights(dir / "weights.bin", model, /*allow_partial=*/false);
  std::ifstream in(dir / "state.json");
  if (!in) throw DataError("cannot open checkpoint state in '" + dir.string() + "'");
  json j;
  in >> j;

  ResumedState state;
  state.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& e : j.at("history")) {
    EpochStats s;
    s.train_loss = e.at("train_loss").get<double>();
    s.val_loss = e.at("val_loss").get<double>();
    s.val_accuracy = e.at("val_accuracy").get<double>();
    state.history.epochs.push_back(s);
  }
  OptimizerConfig ocfg;
  ocfg.kind = optimizer_from_string(j.at("optimizer").at("kind").get<std::string>());
  const auto& jc = j.at("config").at("optimizer");
  ocfg.lr = jc.at("lr").get<double>();
  ocfg.beta1 = jc.at("beta1").get<double>();
  ocfg.beta2 = jc.at("beta2").get<double>();
  ocfg.eps = jc.at("eps").get<double>();
  ocfg.momentum = jc.at("momentum").get<double>();
  state.optimizer = Optimizer(ocfg);
  state.optimizer.load_state_json(j.at("optimizer").dump());

  for (auto& [name, tensor] : read_named_tensors(dir / "best_weights.bin")) {
    state.best_snapshot.emplace_back(name, std::move(tensor));
  }
  return state;
}

}  // namespace pmw
