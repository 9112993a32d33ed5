#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "torsonet/dataset.hpp"
#include "torsonet/graph.hpp"
#include "torsonet/metrics.hpp"

namespace torsonet {

struct OptimizerConfig {
  enum class Kind { adam, sgd_momentum };
  Kind kind = Kind::adam;
  double momentum = 0.9;  // sgd-momentum
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 10;
  int batch_size = 8;
  std::uint64_t seed = 42;
  OptimizerConfig optimizer;
  double val_fraction = 0.2;
  double dropout_rate = 0.2;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double seconds = 0.0;
};

struct History {
  std::vector<EpochStats> epochs;
};

// Per-parameter-block state for adam / sgd-momentum updates over every
// conv and dense block of the model.
class Optimizer {
public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}
  void step(ModelF& model, const Gradients<float>& grads, double learning_rate);

private:
  OptimizerConfig config_;
  std::vector<std::vector<float>> m_, v_;  // adam moments / momentum velocity
  long t_ = 0;
  bool initialized_ = false;
};

// Mini-batch training: deterministic per-epoch shuffles, batch-averaged
// gradients, per-epoch train loss/accuracy, validation accuracy and wall
// time. Identical config + data + seed reproduce the weight trajectory
// bit-for-bit (wall time excepted).
History train(ModelF& model, const SampleSet& train_set, const SampleSet& val_set,
              const TrainConfig& cfg, std::ostream* progress = nullptr);

// Inference-mode pass over the dataset; argmax predictions (ties to the
// lowest class index) fill the confusion matrix.
struct EvalResult {
  ConfusionMatrix confusion;
  MetricsReport metrics;
};
EvalResult evaluate(const ModelF& model, const SampleSet& dataset,
                    const std::vector<std::string>& class_names);

int argmax_class(const TensorF& probs);

// Line-delimited exports (schema in the README).
void write_history(const History& history, const std::filesystem::path& path);

}  // namespace torsonet
