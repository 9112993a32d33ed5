#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "torsonet/ops.hpp"
#include "torsonet/rng.hpp"
#include "torsonet/tensor.hpp"

namespace torsonet {

enum class LayerKind {
  input,
  conv,
  maxpool,
  avgpool,
  concat,
  dense,
  flatten,
  dropout,
  softmax
};

struct ConvSpec {
  int kernel_h, kernel_w, in_channels, out_channels;
};

struct DenseSpec {
  int in_features, out_features;
};

struct DropoutSpec {
  double rate;
};

struct LayerNode {
  std::string id;    // stable dotted id, e.g. "fire.squeeze"
  std::string name;  // display name, e.g. "Squeeze"
  LayerKind kind = LayerKind::input;
  ActivationKind activation = ActivationKind::none;
  std::variant<std::monostate, ConvSpec, PoolSpec, DenseSpec, DropoutSpec> spec;
  std::vector<int> inputs;    // upstream node indices, all < own index
  std::vector<int> out_dims;  // computed at build time

  std::size_t param_count() const;
  std::string label() const;  // "Squeeze (Conv2D)" style
};

struct GraphTopology {
  std::vector<LayerNode> nodes;  // topological order, node 0 is the input
  int input_h = 0, input_w = 0, input_c = 0;
  int num_classes = 0;
  ActivationKind conv_activation = ActivationKind::relu;
  double dropout_rate = 0.0;

  int node_index(std::string_view id) const;  // -1 when absent
  std::size_t param_count() const;
};

// Incrementally assembles a DAG, computing output shapes as nodes are added.
// Node additions fail on duplicate ids or shape-invalid configurations.
class GraphBuilder {
public:
  GraphBuilder(int input_h, int input_w, int input_c, ActivationKind conv_activation);

  int add_conv(const std::string& id, const std::string& name, int kernel_h,
               int kernel_w, int out_channels, int input, ActivationKind activation);
  int add_pool(const std::string& id, const std::string& name, PoolKind kind,
               int pool_h, int pool_w, int stride_h, int stride_w, int input);
  int add_concat(const std::string& id, const std::string& name,
                 const std::vector<int>& inputs);
  int add_flatten(const std::string& id, const std::string& name, int input);
  int add_dropout(const std::string& id, const std::string& name, double rate,
                  int input);
  int add_dense(const std::string& id, const std::string& name, int units, int input,
                ActivationKind activation);

  const std::vector<int>& dims(int node) const;
  ActivationKind conv_activation() const { return conv_activation_; }

  GraphTopology finish(int output, int num_classes, double dropout_rate) &&;

private:
  int append(LayerNode node);
  GraphTopology topo_;
};

// Architecture blocks. Each takes the builder and the producing node index
// and returns the block's output node index.
int build_fire_block(GraphBuilder& g, int input);
int build_block_313(GraphBuilder& g, int input);
int build_trunk(GraphBuilder& g, int input);
int build_reduction_block(GraphBuilder& g, int input);
int build_block_31c(GraphBuilder& g, int input);

// Full network: fire -> 313 -> trunk -> reduction -> 31C -> average pool ->
// flatten -> dropout -> dense 64 -> dense 64 -> dense num_classes (softmax).
// input_hw != 224 builds the same DAG over a smaller image; pool windows are
// clamped to the available extent so the graph stays well-formed.
GraphTopology build_model_topology(int num_classes, ActivationKind conv_activation,
                                   double dropout_rate = 0.2, int input_hw = 224);

// ---------------------------------------------------------------------------
// Parameterized model

template <class T>
struct NodeParams {
  Tensor<T> weights;
  Tensor<T> bias;
  bool present() const { return !weights.empty(); }
  std::size_t count() const { return weights.size() + bias.size(); }
};

template <class T>
struct ModelGraph {
  GraphTopology topo;
  std::vector<NodeParams<T>> params;  // aligned with topo.nodes

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.count();
    return n;
  }
};

template <class T>
ModelGraph<T> build_model(int num_classes, ActivationKind conv_activation,
                          double dropout_rate, std::uint64_t seed, int input_hw = 224);

using ModelF = ModelGraph<float>;
using ModelD = ModelGraph<double>;

// ---------------------------------------------------------------------------
// Execution

template <class T>
struct ForwardPass {
  std::vector<Tensor<T>> outputs;             // per node, post-activation
  std::vector<Tensor<T>> preacts;             // conv/dense pre-activation
  std::vector<PoolResult<T>> pool_state;      // max-pool argmax bookkeeping
  std::vector<DropoutResult<T>> dropout_state;
  bool training = false;
  bool complete = false;

  const Tensor<T>& probs() const { return outputs.back(); }
};

// Evaluates nodes in topological order. training=true applies dropout (rng
// required) and the returned cache feeds backward(); training=false never
// touches the rng. Non-finite node outputs raise NumericError naming the node.
template <class T>
ForwardPass<T> forward(const ModelGraph<T>& model, const Tensor<T>& image,
                       bool training, Rng* rng);

// Inference-only forward; returns class probabilities.
template <class T>
Tensor<T> predict(const ModelGraph<T>& model, const Tensor<T>& image);

template <class T>
struct Gradients {
  std::vector<NodeParams<T>> param_grads;  // aligned with topo.nodes
  Tensor<T> input_grad;

  void accumulate(const Gradients& other);
  void scale(T factor);
};

// Reverse-topological sweep; fan-out nodes receive the sum of their
// consumers' gradients. grad_logits is taken with respect to the final dense
// layer's pre-softmax logits (the fused softmax+cross-entropy convention).
template <class T>
Gradients<T> backward(const ModelGraph<T>& model, const ForwardPass<T>& cache,
                      const Tensor<T>& grad_logits);

// ---------------------------------------------------------------------------
// Summary (the printed architecture table)

struct SummaryRow {
  std::string label;
  std::string kernel_desc;
  std::string activation_desc;
  LayerKind kind;
  std::vector<int> output_shape;
  long params;
  std::vector<std::string> connected_to;  // display names of upstream nodes
};

std::vector<SummaryRow> summarize(const GraphTopology& topo);
void print_summary(std::ostream& os, const GraphTopology& topo);

std::string activation_name(ActivationKind kind);
std::optional<ActivationKind> parse_activation(std::string_view name);
std::string format_grouped(long long value);  // 138052 -> "138,052"

}  // namespace torsonet

#include "torsonet/graph_impl.hpp"
