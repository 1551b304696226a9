#include "pmw/metrics.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pmw {

using nlohmann::json;

namespace {

void check_eval_shapes(const TensorF& probs, const TensorF& labels) {
  const bool p_ok = probs.rank() == 1 || (probs.rank() == 2 && probs.dim(1) == 1);
  const bool l_ok = labels.rank() == 1 || (labels.rank() == 2 && labels.dim(1) == 1);
  if (!p_ok || !l_ok || probs.size() != labels.size()) {
    throw ShapeError("confusion: probs " + shape_str(probs.shape()) +
                     " vs labels " + shape_str(labels.shape()));
  }
}

std::string fixed(double v, int decimals) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

ConfusionMatrix confusion(const TensorF& probs, const TensorF& labels,
                          double threshold) {
  check_eval_shapes(probs, labels);
  ConfusionMatrix cm;
  for (std::int64_t i = 0; i < probs.size(); ++i) {
    const bool predicted = static_cast<double>(probs[i]) >= threshold;
    const bool actual = labels[i] >= 0.5f;
    if (actual && predicted) ++cm.tp;
    else if (actual && !predicted) ++cm.fn;
    else if (!actual && predicted) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

namespace {

ClassMetrics class_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  ClassMetrics m;
  if (tp + fp == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    m.recall_undefined = true;
  } else {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (m.precision + m.recall <= 0.0) {
    m.f1_undefined = true;
  } else {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

}  // namespace

EvaluationReport metrics(const ConfusionMatrix& cm) {
  EvaluationReport r;
  r.cm = cm;
  const std::int64_t total = cm.total();
  r.accuracy = total > 0
                   ? static_cast<double>(cm.tp + cm.tn) / static_cast<double>(total)
                   : 0.0;
  r.positive = class_metrics(cm.tp, cm.fp, cm.fn);
  // not-PMW as the positive class: swap the roles of the error cells
  r.negative = class_metrics(cm.tn, cm.fn, cm.fp);
  r.macro_precision = (r.positive.precision + r.negative.precision) / 2.0;
  r.macro_recall = (r.positive.recall + r.negative.recall) / 2.0;
  r.macro_f1 = (r.positive.f1 + r.negative.f1) / 2.0;
  return r;
}

void misclassification_report(const TensorF& probs, const TensorF& labels,
                              const std::vector<SampleRecord>& records,
                              double threshold, EvaluationReport& report) {
  check_eval_shapes(probs, labels);
  if (records.size() != static_cast<std::size_t>(probs.size())) {
    throw ShapeError("misclassification_report: " + std::to_string(records.size()) +
                     " records for " + std::to_string(probs.size()) + " rows");
  }
  report.fp_by_type.clear();
  report.fn_by_type.clear();
  report.fn_records.clear();
  for (std::int64_t i = 0; i < probs.size(); ++i) {
    const bool predicted = static_cast<double>(probs[i]) >= threshold;
    const bool actual = labels[i] >= 0.5f;
    const auto& rec = records[static_cast<std::size_t>(i)];
    if (!actual && predicted) {
      ++report.fp_by_type[to_string(rec.type)];
    } else if (actual && !predicted) {
      ++report.fn_by_type[to_string(rec.type)];
      report.fn_records.push_back(rec);
    }
  }
}

namespace {

json class_json(const ClassMetrics& m) {
  return json{{"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"precision_undefined", m.precision_undefined},
              {"recall_undefined", m.recall_undefined},
              {"f1_undefined", m.f1_undefined}};
}

std::string emit_json(const EvaluationReport& r) {
  json fn_records = json::array();
  for (const auto& rec : r.fn_records) {
    fn_records.push_back(json{{"path", rec.path},
                              {"type", to_string(rec.type)},
                              {"source", to_string(rec.source)}});
  }
  json j{{"report_version", 1},
         {"architecture", r.architecture},
         {"threshold", r.threshold},
         {"confusion", {{"tp", r.cm.tp}, {"fn", r.cm.fn}, {"fp", r.cm.fp}, {"tn", r.cm.tn}}},
         {"accuracy", r.accuracy},
         {"macro", {{"precision", r.macro_precision}, {"recall", r.macro_recall}, {"f1", r.macro_f1}}},
         {"per_class", {{"PMW", class_json(r.positive)}, {"not-PMW", class_json(r.negative)}}},
         {"misclassification",
          {{"false_positives_by_type", r.fp_by_type},
           {"false_negatives_by_type", r.fn_by_type},
           {"false_negatives", fn_records}}}};
  return j.dump(2) + "\n";
}

// One row per (architecture, class); aggregate accuracy at 4 decimals,
// per-class numbers at 2.
std::string emit_csv(const EvaluationReport& r) {
  std::ostringstream os;
  os << "architecture,class,accuracy,precision,recall,f1\n";
  const struct {
    const char* name;
    const ClassMetrics& m;
  } rows[2] = {{"PMW", r.positive}, {"not-PMW", r.negative}};
  for (const auto& row : rows) {
    os << r.architecture << "," << row.name << "," << fixed(r.accuracy, 4) << ","
       << fixed(row.m.precision, 2) << "," << fixed(row.m.recall, 2) << ","
       << fixed(row.m.f1, 2) << "\n";
  }
  return os.str();
}

void pad(std::ostringstream& os, const std::string& s, std::size_t width) {
  os << s;
  for (std::size_t i = s.size(); i < width; ++i) os << ' ';
}

std::string emit_text(const EvaluationReport& r) {
  std::ostringstream os;
  const std::string arch = r.architecture.empty() ? "model" : r.architecture;
  const std::size_t aw = std::max<std::size_t>(arch.size() + 2, 14);

  pad(os, "Architecture", aw);
  os << "| Accuracy | Precision | Recall | F1 Score\n";
  pad(os, arch, aw);
  os << "| " << fixed(r.accuracy, 4) << "   | " << fixed(r.macro_precision, 2)
     << "      | " << fixed(r.macro_recall, 2) << "   | " << fixed(r.macro_f1, 2)
     << "\n\n";

  pad(os, "Architecture", aw);
  os << "| Class    | Precision | Recall | F1 Score\n";
  const struct {
    const char* name;
    const ClassMetrics& m;
  } rows[2] = {{"PMW", r.positive}, {"not-PMW", r.negative}};
  for (const auto& row : rows) {
    pad(os, arch, aw);
    os << "| ";
    pad(os, row.name, 9);
    os << "| " << fixed(row.m.precision, 2) << "      | " << fixed(row.m.recall, 2)
       << "   | " << fixed(row.m.f1, 2) << "\n";
  }

  os << "\nconfusion (PMW positive): tp=" << r.cm.tp << " fn=" << r.cm.fn
     << " fp=" << r.cm.fp << " tn=" << r.cm.tn << "\n";
  if (!r.fp_by_type.empty()) {
    os << "false positives by type:";
    for (const auto& [k, v] : r.fp_by_type) os << " " << k << "=" << v;
    os << "\n";
  }
  if (!r.fn_by_type.empty()) {
    os << "false negatives by type:";
    for (const auto& [k, v] : r.fn_by_type) os << " " << k << "=" << v;
    os << "\n";
  }
  return os.str();
}

}  // namespace

std::string emit_report(const EvaluationReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: return emit_json(report);
    case ReportFormat::Csv: return emit_csv(report);
    case ReportFormat::Text: return emit_text(report);
  }
  throw DataError("unknown report format");
}

}  // namespace pmw
