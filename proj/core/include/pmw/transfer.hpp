#pragma once

#include <filesystem>
#include <functional>

#include "pmw/train.hpp"

namespace pmw {

struct TransferConfig {
  TrainConfig source;  // pretraining run on the source task
  TrainConfig target;  // both target arms run with this config
  std::string backbone_prefix = "backbone/";
};

struct ArmResult {
  RunHistory history;
  double best_val_accuracy = 0;  // at the restored best epoch
};

struct TransferReport {
  RunHistory source_history;
  ArmResult pretrained;  // backbone loaded from the source run, then frozen
  ArmResult scratch;     // identical fresh model trained end to end
  std::uint64_t backbone_checksum_loaded = 0;
  std::uint64_t backbone_checksum_after = 0;
  bool backbone_frozen_intact = false;
};

// The two-problem workflow: train on the source task, keep the backbone,
// fine-tune a fresh head on the target task with the backbone frozen, and
// compare against the same model trained on the target from scratch.
// make_model must build identically-seeded fresh models on every call.
TransferReport pretrain_transfer(
    const std::function<ModelGraph()>& make_model,
    const TensorDataset& source_train, const TensorDataset& source_val,
    const TensorDataset& target_train, const TensorDataset& target_val,
    const TransferConfig& cfg, const std::filesystem::path& work_dir);

std::string transfer_report_json(const TransferReport& report);

}  // namespace pmw
