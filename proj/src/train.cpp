#include "torsonet/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include "torsonet/threads.hpp"

namespace torsonet {

void TrainConfig::validate() const {
  if (learning_rate < 0.0) throw ArgumentError("learning_rate must be >= 0");
  if (epochs < 1) throw ArgumentError("epochs must be positive");
  if (batch_size < 1) throw ArgumentError("batch_size must be positive");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ArgumentError("val_fraction must be in (0, 1)");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ArgumentError("dropout_rate must be in [0, 1)");
  }
  if (optimizer.kind == OptimizerConfig::Kind::sgd_momentum &&
      (optimizer.momentum < 0.0 || optimizer.momentum >= 1.0)) {
    throw ArgumentError("momentum must be in [0, 1)");
  }
}

int argmax_class(const TensorF& probs) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(probs.size()); ++i) {
    if (probs[i] > probs[best]) best = i;  // strict: ties keep the lowest index
  }
  return best;
}

// ---------------------------------------------------------------------------
// Optimizer

namespace {

// Applies fn to every parameter block (weights, bias interleaved) together
// with the matching gradient block, in node order.
template <class Fn>
void for_each_block(ModelF& model, const Gradients<float>& grads, Fn&& fn) {
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    if (!model.params[i].present()) continue;
    fn(model.params[i].weights.flat(), grads.param_grads[i].weights.flat());
    fn(model.params[i].bias.flat(), grads.param_grads[i].bias.flat());
  }
}

}  // namespace

void Optimizer::step(ModelF& model, const Gradients<float>& grads,
                     double learning_rate) {
  if (!initialized_) {
    for_each_block(model, grads, [&](std::span<float> p, std::span<const float>) {
      m_.emplace_back(p.size(), 0.0f);
      v_.emplace_back(p.size(), 0.0f);
    });
    initialized_ = true;
  }

  const float lr = static_cast<float>(learning_rate);
  std::size_t block = 0;

  if (config_.kind == OptimizerConfig::Kind::adam) {
    ++t_;
    const float b1 = static_cast<float>(config_.beta1);
    const float b2 = static_cast<float>(config_.beta2);
    const float eps = static_cast<float>(config_.epsilon);
    const float bias1 = 1.0f - std::pow(b1, static_cast<float>(t_));
    const float bias2 = 1.0f - std::pow(b2, static_cast<float>(t_));
    for_each_block(model, grads, [&](std::span<float> p, std::span<const float> g) {
      std::vector<float>& m = m_[block];
      std::vector<float>& v = v_[block];
      ++block;
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = b1 * m[i] + (1.0f - b1) * g[i];
        v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
        const float mhat = m[i] / bias1;
        const float vhat = v[i] / bias2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    });
  } else {
    const float mu = static_cast<float>(config_.momentum);
    for_each_block(model, grads, [&](std::span<float> p, std::span<const float> g) {
      std::vector<float>& vel = m_[block];
      ++block;
      for (std::size_t i = 0; i < p.size(); ++i) {
        vel[i] = mu * vel[i] + g[i];
        p[i] -= lr * vel[i];
      }
    });
  }
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

struct SampleResult {
  Gradients<float> grads;
  float loss = 0.0f;
  bool correct = false;
};

Gradients<float> zero_gradients(const ModelF& model) {
  Gradients<float> g;
  g.param_grads.resize(model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    if (!model.params[i].present()) continue;
    g.param_grads[i].weights = TensorF(model.params[i].weights.dims());
    g.param_grads[i].bias = TensorF(model.params[i].bias.dims());
  }
  g.input_grad = TensorF({model.topo.input_h, model.topo.input_w, model.topo.input_c});
  return g;
}

}  // namespace

History train(ModelF& model, const SampleSet& train_set, const SampleSet& val_set,
              const TrainConfig& cfg, std::ostream* progress) {
  cfg.validate();
  const std::size_t n = train_set.size();
  if (n == 0) throw ArgumentError("training set is empty");
  if (static_cast<std::size_t>(cfg.batch_size) > n) {
    throw ArgumentError("batch_size exceeds the training set size");
  }

  Optimizer optimizer(cfg.optimizer);
  History history;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t seen = 0;
    std::size_t batch_index = 0;

    BatchStream batches(n, static_cast<std::size_t>(cfg.batch_size), cfg.seed,
                        static_cast<std::uint64_t>(epoch));
    while (auto batch = batches.next()) {
      const std::size_t bn = batch->size();
      std::vector<SampleResult> results(bn);

      // Per-sample forward/backward in parallel; every sample owns an rng
      // stream derived from (seed, epoch, position), so results do not
      // depend on scheduling.
      parallel_for(bn, [&](std::size_t bi) {
        const std::size_t position = seen + bi;
        const ImageSample sample = train_set.get((*batch)[bi]);
        Rng rng(Rng::mix(cfg.seed, static_cast<std::uint64_t>(epoch), position));
        auto pass = forward(model, sample.pixels, true, &rng);
        auto loss = cross_entropy_loss(pass.probs(), sample.label);
        results[bi].grads = backward(model, pass, loss.grad_logits);
        results[bi].loss = loss.loss;
        results[bi].correct = argmax_class(pass.probs()) == sample.label;
      });

      Gradients<float> total = zero_gradients(model);
      for (SampleResult& r : results) {
        if (!std::isfinite(r.loss)) {
          throw DivergedError("non-finite loss at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(batch_index));
        }
        total.accumulate(r.grads);
        loss_sum += r.loss;
        correct += r.correct ? 1 : 0;
      }
      total.scale(1.0f / static_cast<float>(bn));
      optimizer.step(model, total, cfg.learning_rate);
      seen += bn;
      ++batch_index;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(seen);
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    if (val_set.size() > 0) {
      stats.val_accuracy = evaluate(model, val_set, {}).metrics.accuracy;
    }
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                  epoch_start)
                        .count();
    history.epochs.push_back(stats);
    if (progress) {
      (*progress) << "epoch " << epoch << "/" << cfg.epochs << " train_loss="
                  << stats.train_loss << " train_acc=" << stats.train_accuracy
                  << " val_acc=" << stats.val_accuracy << " time=" << stats.seconds
                  << "s\n";
      progress->flush();
    }
  }
  return history;
}

EvalResult evaluate(const ModelF& model, const SampleSet& dataset,
                    const std::vector<std::string>& class_names) {
  const std::size_t n = dataset.size();
  if (n == 0) throw ArgumentError("evaluation set is empty");

  std::vector<std::string> names = class_names;
  if (names.empty()) {
    for (int k = 0; k < model.topo.num_classes; ++k) {
      names.push_back("class_" + std::to_string(k));
    }
  }
  if (static_cast<int>(names.size()) != model.topo.num_classes) {
    throw DataError("class name count does not match the model's classes");
  }

  std::vector<std::pair<int, int>> outcomes(n);  // (true, predicted)
  parallel_for(n, [&](std::size_t i) {
    const ImageSample sample = dataset.get(i);
    if (sample.label < 0 || sample.label >= model.topo.num_classes) {
      throw DataError("sample label " + std::to_string(sample.label) +
                      " out of range for " + std::to_string(model.topo.num_classes) +
                      " classes");
    }
    outcomes[i] = {sample.label, argmax_class(predict(model, sample.pixels))};
  });

  EvalResult result{ConfusionMatrix(names), {}};
  for (const auto& [truth, predicted] : outcomes) {
    result.confusion.record(truth, predicted);
  }
  result.metrics = metrics_from_confusion(result.confusion);
  return result;
}

void write_history(const History& history, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open history file for writing: " + path.string());
  os << "#epoch\ttrain_loss\ttrain_acc\tval_acc\tseconds\n";
  for (const EpochStats& e : history.epochs) {
    os << e.epoch << "\t" << e.train_loss << "\t" << e.train_accuracy << "\t"
       << e.val_accuracy << "\t" << e.seconds << "\n";
  }
  if (!os) throw IoError("history write failed: " + path.string());
}

}  // namespace torsonet
