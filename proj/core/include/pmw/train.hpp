#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pmw/augment.hpp"
#include "pmw/dataset.hpp"
#include "pmw/graph.hpp"

namespace pmw {

enum class OptimizerKind { Adam, SgdMomentum };

OptimizerKind optimizer_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-7;  // adam
  double momentum = 0.9;                          // sgd
};

// Stateful update rule over named parameter gradients. Frozen parameters are
// never touched; state is keyed by parameter name so it survives checkpoints.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

  void step(ModelGraph& model, const ParamGradMap& grads);
  const OptimizerConfig& config() const { return cfg_; }

  std::string state_json() const;
  void load_state_json(const std::string& text);

 private:
  OptimizerConfig cfg_;
  std::int64_t t_ = 0;  // adam step count
  std::map<std::string, std::vector<float>> m_, v_;
};

struct TrainConfig {
  int max_epochs = 50;
  int patience = 5;
  int batch_size = 32;
  OptimizerConfig optimizer{};
  std::uint64_t seed = 42;
  AugmentConfig augment{};
  bool augment_enabled = true;
  std::string freeze_prefix;  // applied before the first epoch when non-empty
  // when non-empty, the live training state is checkpointed there every
  // checkpoint_every epochs (resume_checkpoint picks it up)
  std::string checkpoint_dir;
  int checkpoint_every = 1;
  bool verbose = false;
};

struct EpochStats {
  double train_loss = 0, val_loss = 0, val_accuracy = 0;
};

struct RunHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;     // 1-based, earliest val-loss minimum
  int stopped_epoch = 0;  // epochs actually run
  double wall_seconds = 0;  // excluded from serialized artifacts
};

// Early stopping is a pure function of the validation-loss sequence:
// the earliest strict minimum is the best epoch, and training stops once
// the number of epochs since it exceeds `patience`.
int best_epoch_of(const std::vector<double>& val_losses);
bool should_stop(const std::vector<double>& val_losses, int patience);

// Runs until the epoch cap or early stop; the model is left holding the
// best-validation-loss weights (restore-best policy).
RunHistory train(ModelGraph& model, const TensorDataset& train_set,
                 const TensorDataset& val_set, const TrainConfig& cfg);

// Continuation with pre-existing history, optimizer state and best-weights
// snapshot (resume path). Epoch-derived rng streams make the continuation
// bit-exact.
RunHistory train_resume(ModelGraph& model, const TensorDataset& train_set,
                        const TensorDataset& val_set, const TrainConfig& cfg,
                        RunHistory initial, Optimizer& opt,
                        std::vector<std::pair<std::string, TensorF>> best_snapshot = {});

// One forward + backward + update over a batch; returns the batch loss.
double train_step(ModelGraph& model, const TensorF& x, const TensorF& y,
                  Optimizer& opt, Rng& rng);

struct EvalResult {
  double loss = 0;
  double accuracy = 0;
  TensorF probs;  // [N,1], dataset order
};
EvalResult evaluate(ModelGraph& model, const TensorDataset& ds, int batch_size);

void save_history_jsonl(const RunHistory& h, const std::filesystem::path& path);
RunHistory load_history_jsonl(const std::filesystem::path& path);

// Checkpoint directory: weights.bin (current), best_weights.bin, state.json
// (history + optimizer state + seed + config echo).
void save_checkpoint(const std::filesystem::path& dir, const ModelGraph& model,
                     const std::vector<std::pair<std::string, TensorF>>& best_snapshot,
                     const Optimizer& opt, const RunHistory& history,
                     const TrainConfig& cfg);

struct ResumedState {
  RunHistory history;
  Optimizer optimizer{OptimizerConfig{}};
  std::vector<std::pair<std::string, TensorF>> best_snapshot;
  std::uint64_t seed = 0;
};
ResumedState resume_checkpoint(const std::filesystem::path& dir, ModelGraph& model);

std::vector<std::pair<std::string, TensorF>> snapshot_state(const ModelGraph& model);
void restore_state(ModelGraph& model,
                   const std::vector<std::pair<std::string, TensorF>>& snapshot);

std::string train_config_json(const TrainConfig& cfg);

}  // namespace pmw
