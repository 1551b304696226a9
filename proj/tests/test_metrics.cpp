#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pmw/metrics.hpp"

using namespace pmw;

namespace {

double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

}  // namespace

TEST_CASE("the reference confusion counts yield the expected metric table") {
  const ConfusionMatrix cm{1178, 53, 76, 1151};
  const EvaluationReport r = metrics(cm);
  CHECK(round_to(r.accuracy, 4) == doctest::Approx(0.9475));
  CHECK(round_to(r.positive.precision, 2) == doctest::Approx(0.94));
  CHECK(round_to(r.positive.recall, 2) == doctest::Approx(0.96));
  CHECK(round_to(r.positive.f1, 2) == doctest::Approx(0.95));
  CHECK(round_to(r.negative.precision, 2) == doctest::Approx(0.96));
  CHECK(round_to(r.negative.recall, 2) == doctest::Approx(0.94));
  CHECK(round_to(r.negative.f1, 2) == doctest::Approx(0.95));
  CHECK(round_to(r.macro_precision, 2) == doctest::Approx(0.95));
  CHECK(round_to(r.macro_recall, 2) == doctest::Approx(0.95));
  CHECK(round_to(r.macro_f1, 2) == doctest::Approx(0.95));
}

TEST_CASE("all-correct predictions score 1.0 everywhere") {
  const TensorF probs({4, 1}, {0.9f, 0.2f, 0.8f, 0.1f});
  const TensorF labels({4}, {1, 0, 1, 0});
  const ConfusionMatrix cm = confusion(probs, labels);
  CHECK(cm.fn == 0);
  CHECK(cm.fp == 0);
  const EvaluationReport r = metrics(cm);
  CHECK(r.accuracy == 1.0);
  CHECK(r.positive.precision == 1.0);
  CHECK(r.positive.recall == 1.0);
  CHECK(r.positive.f1 == 1.0);
  CHECK(r.negative.f1 == 1.0);
}

TEST_CASE("probability exactly at the threshold classifies positive") {
  const TensorF probs({2, 1}, {0.5f, 0.49999f});
  const TensorF labels({2}, {1, 0});
  const ConfusionMatrix cm = confusion(probs, labels, 0.5);
  CHECK(cm.tp == 1);
  CHECK(cm.tn == 1);
}

TEST_CASE("zero denominators come back flagged, not NaN") {
  // no positive predictions, positives present
  const ConfusionMatrix cm{0, 5, 0, 10};
  const EvaluationReport r = metrics(cm);
  CHECK(r.positive.precision == 0.0);
  CHECK(r.positive.precision_undefined);
  CHECK(r.positive.recall == 0.0);
  CHECK_FALSE(r.positive.recall_undefined);
  CHECK(r.positive.f1 == 0.0);
  CHECK(r.positive.f1_undefined);
}

TEST_CASE("confusion matches direct enumeration on random instances") {
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 100);
    std::vector<double> probs(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    TensorF pt({n, 1});
    TensorF lt({n});
    for (int i = 0; i < n; ++i) {
      probs[static_cast<std::size_t>(i)] = unif(gen);
      labels[static_cast<std::size_t>(i)] = static_cast<int>(gen() % 2);
      pt[i] = static_cast<float>(probs[static_cast<std::size_t>(i)]);
      lt[i] = static_cast<float>(labels[static_cast<std::size_t>(i)]);
    }
    const double thr = unif(gen);
    const ConfusionMatrix got = confusion(pt, lt, thr);
    const ConfusionMatrix want = oracle::confusion(probs, labels, thr);
    CHECK(got.tp == want.tp);
    CHECK(got.fn == want.fn);
    CHECK(got.fp == want.fp);
    CHECK(got.tn == want.tn);
    CHECK(got.total() == n);
  }
}

TEST_CASE("metric identities hold over random confusion matrices") {
  std::mt19937 gen(10);
  for (int trial = 0; trial < 200; ++trial) {
    const ConfusionMatrix cm{static_cast<std::int64_t>(gen() % 50),
                             static_cast<std::int64_t>(gen() % 50),
                             static_cast<std::int64_t>(gen() % 50),
                             static_cast<std::int64_t>(gen() % 50)};
    if (cm.total() == 0) continue;
    const EvaluationReport r = metrics(cm);
    if (!r.positive.f1_undefined) {
      const double p = r.positive.precision, rec = r.positive.recall;
      CHECK(r.positive.f1 == doctest::Approx(2 * p * rec / (p + rec)));
    }
    // swapping the positive class swaps the precision/recall pairs
    const EvaluationReport swapped = metrics({cm.tn, cm.fp, cm.fn, cm.tp});
    CHECK(swapped.positive.precision == doctest::Approx(r.negative.precision));
    CHECK(swapped.positive.recall == doctest::Approx(r.negative.recall));
    CHECK(swapped.accuracy == doctest::Approx(r.accuracy));
  }
}

TEST_CASE("raising the threshold never increases fp nor decreases fn") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = 80;
  TensorF pt({n, 1});
  TensorF lt({n});
  for (int i = 0; i < n; ++i) {
    pt[i] = static_cast<float>(unif(gen));
    lt[i] = static_cast<float>(gen() % 2);
  }
  ConfusionMatrix prev = confusion(pt, lt, 0.0);
  for (double thr = 0.05; thr <= 1.0; thr += 0.05) {
    const ConfusionMatrix cur = confusion(pt, lt, thr);
    CHECK(cur.fp <= prev.fp);
    CHECK(cur.fn >= prev.fn);
    prev = cur;
  }
}

TEST_CASE("misclassification report groups errors by type") {
  auto rec = [](TypeTag t, int i) {
    SampleRecord r;
    r.path = "img" + std::to_string(i);
    r.type = t;
    r.cls = class_for_type(t);
    r.content_hash = static_cast<std::uint64_t>(i);
    return r;
  };
  std::vector<SampleRecord> records;
  TensorF probs({7, 1});
  TensorF labels({7});
  // three velella false positives
  for (int i = 0; i < 3; ++i) {
    records.push_back(rec(TypeTag::velella, i));
    probs[i] = 0.9f;
    labels[i] = 0.0f;
  }
  // one illustration false positive
  records.push_back(rec(TypeTag::illustration, 3));
  probs[3] = 0.8f;
  labels[3] = 0.0f;
  // one true negative, one true positive, one false negative
  records.push_back(rec(TypeTag::ship, 4));
  probs[4] = 0.1f;
  labels[4] = 0.0f;
  records.push_back(rec(TypeTag::pmw, 5));
  probs[5] = 0.9f;
  labels[5] = 1.0f;
  records.push_back(rec(TypeTag::pmw, 6));
  probs[6] = 0.2f;
  labels[6] = 1.0f;

  EvaluationReport r = metrics(confusion(probs, labels));
  misclassification_report(probs, labels, records, 0.5, r);
  CHECK(r.fp_by_type.size() == 2);
  CHECK(r.fp_by_type.at("velella") == 3);
  CHECK(r.fp_by_type.at("illustration") == 1);
  CHECK(r.fn_by_type.at("pmw") == 1);
  REQUIRE(r.fn_records.size() == 1);
  CHECK(r.fn_records[0].path == "img6");

  // group totals partition the confusion counts
  int fp_total = 0, fn_total = 0;
  for (const auto& [k, v] : r.fp_by_type) fp_total += v;
  for (const auto& [k, v] : r.fn_by_type) fn_total += v;
  CHECK(fp_total == r.cm.fp);
  CHECK(fn_total == r.cm.fn);

  SUBCASE("zero errors give an empty report") {
    TensorF perfect({7, 1});
    for (int i = 0; i < 7; ++i) perfect[i] = labels[i] >= 0.5f ? 0.9f : 0.1f;
    EvaluationReport clean = metrics(confusion(perfect, labels));
    misclassification_report(perfect, labels, records, 0.5, clean);
    CHECK(clean.fp_by_type.empty());
    CHECK(clean.fn_by_type.empty());
    CHECK(clean.fn_records.empty());
  }
}

TEST_CASE("report emission") {
  EvaluationReport r = metrics({1178, 53, 76, 1151});
  r.architecture = "resnet50";
  r.fp_by_type["velella"] = 46;
  r.fp_by_type["jellyfish"] = 25;

  SUBCASE("text table uses the standard column order") {
    const std::string text = emit_report(r, ReportFormat::Text);
    CHECK(text.find("Architecture") != std::string::npos);
    CHECK(text.find("| Accuracy | Precision | Recall | F1 Score") != std::string::npos);
    CHECK(text.find("0.9475") != std::string::npos);
    CHECK(text.find("velella=46") != std::string::npos);
  }
  SUBCASE("csv has one row per class") {
    const std::string csv = emit_report(r, ReportFormat::Csv);
    CHECK(csv.find("architecture,class,accuracy,precision,recall,f1") == 0);
    CHECK(csv.find("resnet50,PMW,0.9475,0.94,0.96,0.95") != std::string::npos);
    CHECK(csv.find("resnet50,not-PMW,0.9475,0.96,0.94,0.95") != std::string::npos);
  }
  SUBCASE("json carries the schema version") {
    const std::string json_text = emit_report(r, ReportFormat::Json);
    CHECK(json_text.find("\"report_version\": 1") != std::string::npos);
    CHECK(json_text.find("\"confusion\"") != std::string::npos);
  }
}
