#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pmw/manifest.hpp"
#include "pmw/tensor.hpp"

namespace pmw {

// PMW is the positive class throughout.
struct ConfusionMatrix {
  std::int64_t tp = 0, fn = 0, fp = 0, tn = 0;
  std::int64_t total() const { return tp + fn + fp + tn; }
};

// A probability exactly at the threshold classifies positive.
ConfusionMatrix confusion(const TensorF& probs, const TensorF& labels,
                          double threshold = 0.5);

// Zero-denominator metrics come back as 0 with the undefined flag set, so
// reports stay machine-readable.
struct ClassMetrics {
  double precision = 0, recall = 0, f1 = 0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct EvaluationReport {
  ConfusionMatrix cm;
  double accuracy = 0;       // global; identical from either class's viewpoint
  ClassMetrics positive;     // PMW as the positive class
  ClassMetrics negative;     // not-PMW as the positive class
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
  double threshold = 0.5;
  std::string architecture;
  // misclassification breakdown
  std::map<std::string, int> fp_by_type;  // not-PMW records predicted PMW
  std::map<std::string, int> fn_by_type;
  std::vector<SampleRecord> fn_records;   // kept for human inspection
};

// Metric arithmetic only (no misclassification breakdown).
EvaluationReport metrics(const ConfusionMatrix& cm);

// Groups errors by type tag; records must align with probs/labels rows.
void misclassification_report(const TensorF& probs, const TensorF& labels,
                              const std::vector<SampleRecord>& records,
                              double threshold, EvaluationReport& report);

enum class ReportFormat { Json, Csv, Text };
std::string emit_report(const EvaluationReport& report, ReportFormat format);

}  // namespace pmw
