#include "torsonet/metrics.hpp"

#include <iomanip>
#include <ostream>

namespace torsonet {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> names)
    : counts(names.size(), std::vector<std::int64_t>(names.size(), 0)),
      class_names(std::move(names)) {}

void ConfusionMatrix::record(int true_class, int predicted_class) {
  if (true_class < 0 || true_class >= num_classes() || predicted_class < 0 ||
      predicted_class >= num_classes()) {
    throw DataError("confusion matrix class index out of range");
  }
  ++counts[true_class][predicted_class];
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts) {
    for (std::int64_t c : row) t += c;
  }
  return t;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.num_classes() != num_classes()) {
    throw DataError("confusion matrix merge size mismatch");
  }
  for (int i = 0; i < num_classes(); ++i) {
    for (int j = 0; j < num_classes(); ++j) counts[i][j] += other.counts[i][j];
  }
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm) {
  const int k = cm.num_classes();
  if (cm.total() <= 0) throw ArgumentError("metrics need a non-empty confusion matrix");

  MetricsReport report;
  report.class_names = cm.class_names;
  report.precision.resize(k);
  report.recall.resize(k);
  report.f1.resize(k);

  std::int64_t trace = 0;
  double f1_sum = 0.0;
  for (int c = 0; c < k; ++c) {
    std::int64_t col = 0, row = 0;
    for (int i = 0; i < k; ++i) {
      col += cm.counts[i][c];
      row += cm.counts[c][i];
    }
    const std::int64_t diag = cm.counts[c][c];
    trace += diag;
    const double p = col > 0 ? static_cast<double>(diag) / static_cast<double>(col) : 0.0;
    const double r = row > 0 ? static_cast<double>(diag) / static_cast<double>(row) : 0.0;
    report.precision[c] = p;
    report.recall[c] = r;
    report.f1[c] = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    f1_sum += report.f1[c];
  }
  report.accuracy = static_cast<double>(trace) / static_cast<double>(cm.total());
  report.macro_f1 = f1_sum / k;
  return report;
}

void print_metrics(std::ostream& os, const MetricsReport& report) {
  const auto flags = os.flags();
  os << std::left << std::setw(12) << "Metric" << std::setw(16) << "Class"
     << "Value\n";
  os << std::fixed << std::setprecision(4);
  const char* metric_names[3] = {"Precision", "Recall", "F1-score"};
  const std::vector<double>* columns[3] = {&report.precision, &report.recall,
                                           &report.f1};
  for (int m = 0; m < 3; ++m) {
    for (std::size_t c = 0; c < report.class_names.size(); ++c) {
      os << std::left << std::setw(12) << metric_names[m] << std::setw(16)
         << report.class_names[c] << (*columns[m])[c] << "\n";
    }
  }
  os << std::left << std::setw(12) << "Accuracy" << std::setw(16) << "-"
     << report.accuracy << "\n";
  os << std::left << std::setw(12) << "Macro-F1" << std::setw(16) << "-"
     << report.macro_f1 << "\n";
  os.flags(flags);
}

}  // namespace torsonet
