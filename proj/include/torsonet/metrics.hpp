#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "torsonet/error.hpp"

namespace torsonet {

// K x K counts indexed [true_class][predicted_class].
struct ConfusionMatrix {
  std::vector<std::vector<std::int64_t>> counts;
  std::vector<std::string> class_names;

  explicit ConfusionMatrix(std::vector<std::string> names);
  ConfusionMatrix() = default;

  int num_classes() const { return static_cast<int>(counts.size()); }
  void record(int true_class, int predicted_class);
  std::int64_t total() const;
  void merge(const ConfusionMatrix& other);
};

struct MetricsReport {
  std::vector<double> precision;  // per class, 0 when the column is empty
  std::vector<double> recall;     // per class, 0 when the row is empty
  std::vector<double> f1;         // 2PR/(P+R), 0 when P+R == 0
  double accuracy = 0.0;          // trace / total
  double macro_f1 = 0.0;
  std::vector<std::string> class_names;
};

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm);

// Table layout with one row per (metric, class) pair, then overall lines.
void print_metrics(std::ostream& os, const MetricsReport& report);

}  // namespace torsonet
