// pmw: manifest-driven training and evaluation pipeline for the
// Portuguese man-of-war binary image classifier.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pmw/dataset.hpp"
#include "pmw/image.hpp"
#include "pmw/manifest.hpp"
#include "pmw/metrics.hpp"
#include "pmw/models.hpp"
#include "pmw/serialize.hpp"
#include "pmw/synth.hpp"
#include "pmw/train.hpp"
#include "pmw/transfer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::uint64_t env_seed_fallback() {
  if (const char* env = std::getenv("PMW_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw pmw::DataError("PMW_SEED must be an unsigned integer");
    }
  }
  return 42;
}

void require_fresh_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) {
      throw pmw::DataError("output directory '" + dir.string() +
                           "' already exists; pass --force to overwrite");
    }
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw pmw::DataError("cannot write '" + path.string() + "'");
  out << text;
}

// ---- config resolution: defaults <- config file <- --set overrides ----

// Seed precedence: --seed flag > --set seed= > config file > PMW_SEED > 42.
json default_train_config() {
  pmw::TrainConfig d;
  d.seed = env_seed_fallback();
  json j = json::parse(pmw::train_config_json(d));
  j["arch"] = "resnet_s";
  j["input_hw"] = 0;  // 0 = architecture default
  j["threshold"] = 0.5;
  return j;
}

void merge_json(json& base, const json& overlay) {
  for (const auto& [key, value] : overlay.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      merge_json(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

void apply_set_override(json& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw pmw::DataError("--set expects key=value, got '" + kv + "'");
  }
  const std::string key = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;  // plain string

  json* cursor = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw pmw::DataError("--set: empty key segment in '" + kv + "'");
    if (dot == std::string::npos) {
      (*cursor)[part] = value;
      break;
    }
    cursor = &(*cursor)[part];
    start = dot + 1;
  }
}

json resolve_config(const std::string& config_path,
                    const std::vector<std::string>& sets) {
  json cfg = default_train_config();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw pmw::DataError("cannot open config '" + config_path + "'");
    json file_cfg;
    try {
      in >> file_cfg;
    } catch (const json::exception& e) {
      throw pmw::DataError("config '" + config_path + "': " + e.what());
    }
    merge_json(cfg, file_cfg);
  }
  for (const auto& kv : sets) apply_set_override(cfg, kv);
  return cfg;
}

pmw::TrainConfig train_config_from_json(const json& cfg) {
  pmw::TrainConfig t;
  t.max_epochs = cfg.at("max_epochs").get<int>();
  t.patience = cfg.at("patience").get<int>();
  t.batch_size = cfg.at("batch_size").get<int>();
  t.seed = cfg.at("seed").get<std::uint64_t>();
  t.augment_enabled = cfg.at("augment_enabled").get<bool>();
  t.freeze_prefix = cfg.at("freeze_prefix").get<std::string>();
  const auto& o = cfg.at("optimizer");
  t.optimizer.kind = pmw::optimizer_from_string(o.at("kind").get<std::string>());
  t.optimizer.lr = o.at("lr").get<double>();
  t.optimizer.beta1 = o.at("beta1").get<double>();
  t.optimizer.beta2 = o.at("beta2").get<double>();
  t.optimizer.eps = o.at("eps").get<double>();
  t.optimizer.momentum = o.at("momentum").get<double>();
  const auto& a = cfg.at("augment");
  t.augment.rotation_deg = a.at("rotation_deg").get<float>();
  t.augment.zoom_min = a.at("zoom_min").get<float>();
  t.augment.zoom_max = a.at("zoom_max").get<float>();
  t.augment.hflip_prob = a.at("hflip_prob").get<float>();
  return t;
}

// Builds the architecture ready for binary training: -S variants come with
// the head; full-scale graphs get their classifier replaced by it.
pmw::ModelGraph build_for_training(pmw::models::Arch arch, int input_hw,
                                   std::uint64_t seed) {
  pmw::models::InputShape in{3, input_hw, input_hw};
  pmw::ModelGraph g = pmw::models::build_arch(arch, in, seed);
  if (g.any_node_has_prefix("classifier/")) {
    pmw::models::attach_head(g, pmw::models::HeadConfig{}, seed);
  }
  return g;
}

struct ResolvedRun {
  json cfg;
  pmw::models::Arch arch;
  int input_hw = 0;
  pmw::TrainConfig train_cfg;
};

ResolvedRun resolve_run(const std::string& config_path,
                        const std::vector<std::string>& sets) {
  ResolvedRun r;
  r.cfg = resolve_config(config_path, sets);
  r.arch = pmw::models::arch_from_string(r.cfg.at("arch").get<std::string>());
  r.input_hw = r.cfg.at("input_hw").get<int>();
  if (r.input_hw == 0) {
    r.input_hw = pmw::models::default_input_hw(r.arch);
    r.cfg["input_hw"] = r.input_hw;
  }
  r.train_cfg = train_config_from_json(r.cfg);
  return r;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// ---- subcommand bodies ----

int cmd_dataset_build(const std::string& images_dir, const std::string& csv,
                      const std::string& taxon_map, const std::string& source,
                      const std::string& exclude, bool keep_duplicates,
                      const std::string& out) {
  if (images_dir.empty() && csv.empty()) {
    throw pmw::DataError("dataset build: need --images and/or --inat-csv");
  }
  pmw::SampleManifest m;
  if (!images_dir.empty()) {
    const pmw::Source src = pmw::source_from_string(source);
    bool any = false;
    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(images_dir)) {
      if (entry.is_directory()) subdirs.push_back(entry.path());
    }
    std::sort(subdirs.begin(), subdirs.end());
    for (const auto& dir : subdirs) {
      pmw::TypeTag type;
      try {
        type = pmw::type_from_string(dir.filename().string());
      } catch (const pmw::DataError&) {
        std::cerr << "warning: ignoring directory '" << dir.string()
                  << "' (not a type tag)\n";
        continue;
      }
      const auto summary = pmw::ingest_directory(m, dir, type, src);
      print_warnings(summary.warnings);
      any = true;
    }
    if (!any) {
      throw pmw::DataError("dataset build: no <type-tag> subdirectories under '" +
                           images_dir + "'");
    }
  }
  if (!csv.empty()) {
    const pmw::TaxonMap taxa = taxon_map.empty() ? pmw::TaxonMap::defaults()
                                                 : pmw::TaxonMap::load(taxon_map);
    const auto summary = pmw::ingest_inaturalist_csv(m, csv, taxa);
    print_warnings(summary.warnings);
  }
  if (!keep_duplicates) {
    const int removed = pmw::dedupe(m);
    if (removed > 0) std::cerr << "dedupe removed " << removed << " record(s)\n";
  }
  if (!exclude.empty()) {
    const int removed = pmw::apply_exclude_list(m, exclude);
    std::cerr << "exclude list removed " << removed << " record(s)\n";
  }
  pmw::save_manifest(m, out);
  std::cout << pmw::stats_table(pmw::dataset_stats(m));
  std::cout << "wrote " << m.records.size() << " records to " << out << "\n";
  return kExitOk;
}

int cmd_dataset_split(const std::string& manifest_path, const std::string& out,
                      const std::string& ratios_str, std::uint64_t seed) {
  pmw::SampleManifest m = pmw::load_manifest(manifest_path);
  pmw::SplitRatios ratios;
  if (!ratios_str.empty()) {
    double tr, va, te;
    if (std::sscanf(ratios_str.c_str(), "%lf,%lf,%lf", &tr, &va, &te) != 3) {
      throw pmw::DataError("--ratios expects train,val,test");
    }
    ratios = {tr, va, te};
  }
  const auto report = pmw::stratified_split(m, ratios, seed);
  print_warnings(report.warnings);
  pmw::save_manifest(m, out);
  std::cout << "split " << report.train << "/" << report.val << "/" << report.test
            << " (train/val/test) -> " << out << "\n";
  return kExitOk;
}

int cmd_dataset_stats(const std::string& manifest_path, const std::string& format) {
  const pmw::SampleManifest m = pmw::load_manifest(manifest_path);
  const auto stats = pmw::dataset_stats(m);
  if (format == "json") {
    json j{{"by_class", stats.by_class},
           {"by_type", stats.by_type},
           {"by_source", stats.by_source},
           {"by_split", stats.by_split},
           {"total", stats.total}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << pmw::stats_table(stats);
  }
  return kExitOk;
}

int cmd_synth(const std::string& out, int n_per_class, std::uint64_t seed,
              const std::string& variant, int size, bool force) {
  require_fresh_dir(out, force);
  pmw::SynthConfig cfg;
  cfg.n_per_class = n_per_class;
  cfg.seed = seed;
  cfg.image_size = size;
  if (variant == "standard") {
    cfg.style.palette = 0;
  } else if (variant == "alt") {
    cfg.style.palette = 1;
  } else {
    throw pmw::DataError("--variant must be standard|alt");
  }
  const auto manifest = pmw::generate_synthetic(out, cfg);
  std::cout << "generated " << manifest.records.size() << " images under " << out
            << "\n";
  return kExitOk;
}

pmw::EvaluationReport evaluate_split(pmw::ModelGraph& model,
                                     const pmw::SampleManifest& manifest,
                                     pmw::Split split, int input_hw,
                                     int batch_size, double threshold,
                                     const std::string& arch_name) {
  const auto ds = pmw::TensorDataset::load(manifest, split, input_hw);
  if (ds.empty()) {
    throw pmw::DataError("no records in split '" + pmw::to_string(split) + "'");
  }
  const auto eval = pmw::evaluate(model, ds, batch_size);
  std::vector<float> labels;
  std::vector<pmw::SampleRecord> records;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    labels.push_back(ds.label(i));
    records.push_back(ds.record(i));
  }
  const pmw::TensorF label_tensor({static_cast<int>(labels.size())}, labels);
  auto report = pmw::metrics(pmw::confusion(eval.probs, label_tensor, threshold));
  report.threshold = threshold;
  report.architecture = arch_name;
  pmw::misclassification_report(eval.probs, label_tensor, records, threshold, report);
  return report;
}

int cmd_train(const std::string& manifest_path, const std::string& out,
              const std::string& config_path, std::vector<std::string> sets,
              const std::string& pretrained, bool force) {
  const ResolvedRun run = resolve_run(config_path, sets);
  require_fresh_dir(out, force);
  const fs::path out_dir(out);

  json cfg = run.cfg;
  cfg["manifest"] = manifest_path;
  cfg["pretrained"] = pretrained;
  write_text(out_dir / "config.json", cfg.dump(2) + "\n");
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    std::string verbatim((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    write_text(out_dir / "config_input.json", verbatim);
  }

  const pmw::SampleManifest manifest = pmw::load_manifest(manifest_path);
  const auto train_set =
      pmw::TensorDataset::load(manifest, pmw::Split::train, run.input_hw);
  const auto val_set =
      pmw::TensorDataset::load(manifest, pmw::Split::val, run.input_hw);

  pmw::ModelGraph model =
      build_for_training(run.arch, run.input_hw, run.train_cfg.seed);

  pmw::TrainConfig tcfg = run.train_cfg;
  if (!pretrained.empty()) {
    const auto report = pmw::load_weights(pretrained, model, /*allow_partial=*/true);
    std::cerr << "loaded " << report.loaded.size() << " tensors from " << pretrained
              << " (" << report.skipped.size() << " skipped, "
              << report.missing.size() << " missing)\n";
    // pre-existing layers stay frozen while fine-tuning, unless overridden
    if (tcfg.freeze_prefix.empty()) tcfg.freeze_prefix = "backbone/";
  }
  if (tcfg.freeze_prefix == "none") tcfg.freeze_prefix.clear();
  tcfg.verbose = true;

  const auto history = pmw::train(model, train_set, val_set, tcfg);

  pmw::save_weights(model, out_dir / "weights.bin");
  pmw::save_history_jsonl(history, out_dir / "history.jsonl");
  auto report = evaluate_split(model, manifest, pmw::Split::val, run.input_hw,
                               tcfg.batch_size, cfg.at("threshold").get<double>(),
                               pmw::models::to_string(run.arch));
  write_text(out_dir / "report.json", pmw::emit_report(report, pmw::ReportFormat::Json));
  write_text(out_dir / "timing.json",
             json{{"wall_seconds", history.wall_seconds}}.dump(2) + "\n");

  std::cout << "run " << out << ": stopped at epoch " << history.stopped_epoch
            << ", best epoch " << history.best_epoch << ", val accuracy "
            << report.accuracy << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& run_dir, const std::string& split_name,
             const std::string& manifest_override, bool force) {
  const fs::path dir(run_dir);
  std::ifstream cfg_in(dir / "config.json");
  if (!cfg_in) {
    throw pmw::DataError("'" + run_dir + "' has no config.json (not a run directory)");
  }
  json cfg;
  cfg_in >> cfg;
  const auto arch = pmw::models::arch_from_string(cfg.at("arch").get<std::string>());
  const int input_hw = cfg.at("input_hw").get<int>();
  const double threshold = cfg.at("threshold").get<double>();
  const std::string manifest_path =
      manifest_override.empty() ? cfg.at("manifest").get<std::string>()
                                : manifest_override;

  pmw::ModelGraph model =
      build_for_training(arch, input_hw, cfg.at("seed").get<std::uint64_t>());
  pmw::load_weights(dir / "weights.bin", model, /*allow_partial=*/false);

  const pmw::Split split = pmw::split_from_string(split_name);
  const pmw::SampleManifest manifest = pmw::load_manifest(manifest_path);
  auto report = evaluate_split(model, manifest, split, input_hw,
                               cfg.at("batch_size").get<int>(), threshold,
                               pmw::models::to_string(arch));

  const fs::path eval_dir = dir / ("eval_" + split_name);
  require_fresh_dir(eval_dir, force);
  write_text(eval_dir / "report.json", pmw::emit_report(report, pmw::ReportFormat::Json));
  write_text(eval_dir / "report.csv", pmw::emit_report(report, pmw::ReportFormat::Csv));
  write_text(eval_dir / "report.txt", pmw::emit_report(report, pmw::ReportFormat::Text));
  std::cout << pmw::emit_report(report, pmw::ReportFormat::Text);
  return kExitOk;
}

int cmd_predict(const std::string& weights, const std::string& arch_name,
                const std::string& input, double threshold, int input_hw,
                const std::string& out_csv) {
  const auto arch = pmw::models::arch_from_string(arch_name);
  if (input_hw == 0) input_hw = pmw::models::default_input_hw(arch);
  pmw::ModelGraph model = build_for_training(arch, input_hw, /*seed=*/0);
  pmw::load_weights(weights, model, /*allow_partial=*/false);

  std::vector<std::string> paths;
  if (fs::is_directory(input)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(input)) {
      if (entry.is_regular_file() && pmw::probe_image(entry.path())) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) paths.push_back(f.string());
  } else {
    const pmw::SampleManifest m = pmw::load_manifest(input);
    for (const auto& rec : m.records) paths.push_back(m.resolve(rec).string());
  }
  if (paths.empty()) throw pmw::DataError("predict: no images under '" + input + "'");

  std::ostringstream csv;
  csv << "path,probability,label\n";
  for (const auto& p : paths) {
    const pmw::TensorF img = pmw::load_image(p, input_hw, input_hw);
    std::vector<const pmw::TensorF*> batch{&img};
    const pmw::TensorF probs = model.forward(pmw::stack_images(batch), pmw::Mode::Infer);
    const double prob = probs[0];
    csv << p << "," << prob << ","
        << (prob >= threshold ? "PMW" : "not-PMW") << "\n";
  }
  if (out_csv.empty()) {
    std::cout << csv.str();
  } else {
    write_text(out_csv, csv.str());
    std::cout << "wrote predictions for " << paths.size() << " images to " << out_csv
              << "\n";
  }
  return kExitOk;
}

int cmd_transfer(const std::string& source_manifest, const std::string& target_manifest,
                 const std::string& out, const std::string& config_path,
                 std::vector<std::string> sets, int source_epochs, bool force) {
  const ResolvedRun run = resolve_run(config_path, sets);
  require_fresh_dir(out, force);
  const fs::path out_dir(out);
  write_text(out_dir / "config.json", run.cfg.dump(2) + "\n");

  const auto src = pmw::load_manifest(source_manifest);
  const auto tgt = pmw::load_manifest(target_manifest);
  const auto src_train = pmw::TensorDataset::load(src, pmw::Split::train, run.input_hw);
  const auto src_val = pmw::TensorDataset::load(src, pmw::Split::val, run.input_hw);
  const auto tgt_train = pmw::TensorDataset::load(tgt, pmw::Split::train, run.input_hw);
  const auto tgt_val = pmw::TensorDataset::load(tgt, pmw::Split::val, run.input_hw);

  pmw::TransferConfig tc;
  tc.source = run.train_cfg;
  tc.target = run.train_cfg;
  if (source_epochs > 0) tc.source.max_epochs = source_epochs;

  const auto arch = run.arch;
  const int hw = run.input_hw;
  const std::uint64_t seed = run.train_cfg.seed;
  const auto report = pmw::pretrain_transfer(
      [arch, hw, seed] { return build_for_training(arch, hw, seed); },
      src_train, src_val, tgt_train, tgt_val, tc, out_dir);

  write_text(out_dir / "transfer_report.json", pmw::transfer_report_json(report));
  std::cout << "pretrained arm val acc " << report.pretrained.best_val_accuracy
            << " vs scratch " << report.scratch.best_val_accuracy
            << " (backbone intact: " << (report.backbone_frozen_intact ? "yes" : "no")
            << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Portuguese man-of-war image classification pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_flag_callback("--version", [] {
    std::cout << "pmw 0.1.0\n";
    std::exit(kExitOk);
  });
  auto* seed_opt = app.add_option("--seed", seed, "global seed (env PMW_SEED is the fallback)");

  // dataset
  auto* dataset = app.add_subcommand("dataset", "manifest construction and inspection");
  dataset->require_subcommand(1);
  std::string images_dir, csv, taxon_map, source = "other", exclude, out, manifest_path;
  bool keep_duplicates = false, force = false;
  auto* build = dataset->add_subcommand("build", "ingest images into a manifest");
  build->add_option("--images", images_dir, "directory with <type-tag> subdirectories");
  build->add_option("--inat-csv", csv, "iNaturalist-style export csv");
  build->add_option("--taxon-map", taxon_map, "json taxon->type mapping");
  build->add_option("--source", source, "source tag for --images records")
      ->default_str("other");
  build->add_option("--exclude", exclude, "file of content hashes to drop");
  build->add_flag("--keep-duplicates", keep_duplicates, "skip content-hash dedupe");
  build->add_option("-o,--out", out, "output manifest path")->required();

  std::string ratios = "0.6,0.2,0.2", split_out;
  auto* split = dataset->add_subcommand("split", "assign stratified train/val/test splits");
  split->add_option("--manifest", manifest_path, "input manifest")->required();
  split->add_option("-o,--out", split_out, "output manifest path")->required();
  split->add_option("--ratios", ratios, "train,val,test fractions")->default_str("0.6,0.2,0.2");

  std::string stats_format = "text";
  auto* stats = dataset->add_subcommand("stats", "count records by class/type/source/split");
  stats->add_option("--manifest", manifest_path, "input manifest")->required();
  stats->add_option("--format", stats_format, "text|json")->default_str("text");

  // synth
  int n_per_class = 600, synth_size = 64;
  std::string synth_out, variant = "standard";
  auto* synth = app.add_subcommand("synth", "generate the deterministic synthetic dataset");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--n-per-class", n_per_class, "images per class")->default_val(600);
  synth->add_option("--variant", variant, "standard|alt palette")->default_str("standard");
  synth->add_option("--size", synth_size, "image edge length")->default_val(64);
  synth->add_flag("--force", force, "overwrite the output directory");

  // train
  std::string train_manifest, train_out, config_path, pretrained;
  std::vector<std::string> sets;
  auto* train_cmd = app.add_subcommand("train", "train an architecture on a split manifest");
  train_cmd->add_option("--manifest", train_manifest, "split manifest")->required();
  train_cmd->add_option("--out", train_out, "run directory")->required();
  std::string train_arch;
  train_cmd->add_option("--arch", train_arch,
                        "architecture (shorthand for --set arch=...)");
  train_cmd->add_option("--config", config_path, "json config file");
  train_cmd->add_option("--set", sets, "config override key=value (repeatable)");
  train_cmd->add_option("--pretrained", pretrained, "backbone weight file to load and freeze");
  train_cmd->add_flag("--force", force, "overwrite the run directory");

  // eval
  std::string run_dir, eval_split = "test", manifest_override;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a run directory on a split");
  eval_cmd->add_option("--run", run_dir, "run directory from train")->required();
  eval_cmd->add_option("--split", eval_split, "train|val|test")->default_str("test");
  eval_cmd->add_option("--manifest", manifest_override, "manifest override");
  eval_cmd->add_flag("--force", force, "overwrite an existing eval directory");

  // predict
  std::string weights, pred_arch = "resnet_s", pred_input, pred_out;
  double threshold = 0.5;
  int pred_hw = 0;
  auto* predict = app.add_subcommand("predict", "classify a directory or manifest of images");
  predict->add_option("--weights", weights, "model weight file")->required();
  predict->add_option("--arch", pred_arch, "architecture of the weights")->required();
  predict->add_option("--input", pred_input, "image directory or manifest")->required();
  predict->add_option("--threshold", threshold, "positive threshold")->default_val(0.5);
  predict->add_option("--input-hw", pred_hw, "input edge length (0 = arch default)");
  predict->add_option("-o,--out", pred_out, "output csv (stdout when omitted)");

  // transfer
  std::string src_manifest, tgt_manifest, transfer_out;
  int source_epochs = 0;
  auto* transfer = app.add_subcommand(
      "transfer", "pretrain on a source task, fine-tune frozen on a target task");
  transfer->add_option("--source-manifest", src_manifest, "source split manifest")->required();
  transfer->add_option("--target-manifest", tgt_manifest, "target split manifest")->required();
  transfer->add_option("--out", transfer_out, "output directory")->required();
  transfer->add_option("--config", config_path, "json config file");
  transfer->add_option("--set", sets, "config override key=value (repeatable)");
  transfer->add_option("--source-epochs", source_epochs, "epoch cap for the source run");
  transfer->add_flag("--force", force, "overwrite the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    seed_given = seed_opt->count() > 0;
    const std::uint64_t effective_seed = seed_given ? seed : env_seed_fallback();
    if (!train_arch.empty()) sets.push_back("arch=" + train_arch);
    if (seed_given) sets.push_back("seed=" + std::to_string(seed));

    if (build->parsed()) {
      return cmd_dataset_build(images_dir, csv, taxon_map, source, exclude,
                               keep_duplicates, out);
    }
    if (split->parsed()) {
      return cmd_dataset_split(manifest_path, split_out, ratios, effective_seed);
    }
    if (stats->parsed()) return cmd_dataset_stats(manifest_path, stats_format);
    if (synth->parsed()) {
      return cmd_synth(synth_out, n_per_class, effective_seed, variant, synth_size,
                       force);
    }
    if (train_cmd->parsed()) {
      return cmd_train(train_manifest, train_out, config_path, sets, pretrained, force);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(run_dir, eval_split, manifest_override, force);
    }
    if (predict->parsed()) {
      return cmd_predict(weights, pred_arch, pred_input, threshold, pred_hw, pred_out);
    }
    if (transfer->parsed()) {
      return cmd_transfer(src_manifest, tgt_manifest, transfer_out, config_path, sets,
                          source_epochs, force);
    }
    std::cerr << "no subcommand\n";
    return kExitUsage;
  } catch (const pmw::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const pmw::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const pmw::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
