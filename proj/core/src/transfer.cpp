#include "pmw/transfer.hpp"

#include <nlohmann/json.hpp>

#include "pmw/models.hpp"
#include "pmw/serialize.hpp"

namespace pmw {

using nlohmann::json;

namespace {

double accuracy_at_best(const RunHistory& h) {
  if (h.best_epoch < 1 ||
      h.best_epoch > static_cast<int>(h.epochs.size())) {
    return 0.0;
  }
  return h.epochs[static_cast<std::size_t>(h.best_epoch - 1)].val_accuracy;
}

}  // namespace

TransferReport pretrain_transfer(
    const std::function<ModelGraph()>& make_model,
    const TensorDataset& source_train, const TensorDataset& source_val,
    const TensorDataset& target_train, const TensorDataset& target_val,
    const TransferConfig& cfg, const std::filesystem::path& work_dir) {
  std::filesystem::create_directories(work_dir);
  const auto backbone_path = work_dir / "backbone.bin";

  TransferReport report;

  // (a) source task, full network
  {
    ModelGraph source_model = make_model();
    report.source_history = train(source_model, source_train, source_val, cfg.source);
    // (b) keep the learned feature extractor
    save_weights(source_model, backbone_path, cfg.backbone_prefix);
  }

  // (c)+(d) fresh head on the pretrained, frozen backbone
  {
    ModelGraph model = make_model();
    load_weights(backbone_path, model, /*allow_partial=*/true);
    models::freeze(model, cfg.backbone_prefix);
    report.backbone_checksum_loaded = model.content_checksum_prefix(cfg.backbone_prefix);
    report.pretrained.history = train(model, target_train, target_val, cfg.target);
    report.backbone_checksum_after = model.content_checksum_prefix(cfg.backbone_prefix);
    report.pretrained.best_val_accuracy = accuracy_at_best(report.pretrained.history);
    report.backbone_frozen_intact =
        report.backbone_checksum_loaded == report.backbone_checksum_after;
  }

  // control arm: identical init, no pretraining, nothing frozen
  {
    ModelGraph model = make_model();
    report.scratch.history = train(model, target_train, target_val, cfg.target);
    report.scratch.best_val_accuracy = accuracy_at_best(report.scratch.history);
  }
  return report;
}

std::string transfer_report_json(const TransferReport& report) {
  auto arm = [](const ArmResult& a) {
    json epochs = json::array();
    for (const auto& e : a.history.epochs) {
      epochs.push_back(json{{"train_loss", e.train_loss},
                            {"val_loss", e.val_loss},
                            {"val_accuracy", e.val_accuracy}});
    }
    return json{{"best_epoch", a.history.best_epoch},
                {"stopped_epoch", a.history.stopped_epoch},
                {"best_val_accuracy", a.best_val_accuracy},
                {"epochs", epochs}};
  };
  json j{{"report_version", 1},
         {"source",
          {{"best_epoch", report.source_history.best_epoch},
           {"stopped_epoch", report.source_history.stopped_epoch}}},
         {"pretrained_arm", arm(report.pretrained)},
         {"scratch_arm", arm(report.scratch)},
         {"backbone_frozen_intact", report.backbone_frozen_intact}};
  return j.dump(2) + "\n";
}

}  // namespace pmw
