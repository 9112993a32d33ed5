#pragma once

// Template implementations for graph.hpp. Not a standalone header.

#include <cassert>

namespace torsonet {

template <class T>
ModelGraph<T> build_model(int num_classes, ActivationKind conv_activation,
                          double dropout_rate, std::uint64_t seed, int input_hw) {
  ModelGraph<T> model;
  model.topo = build_model_topology(num_classes, conv_activation, dropout_rate, input_hw);
  model.params.resize(model.topo.nodes.size());

  Rng rng(seed);
  for (std::size_t i = 0; i < model.topo.nodes.size(); ++i) {
    const LayerNode& node = model.topo.nodes[i];
    if (node.kind == LayerKind::conv) {
      const auto& spec = std::get<ConvSpec>(node.spec);
      auto p = ConvParams<T>::he_init(spec.kernel_h, spec.kernel_w, spec.in_channels,
                                      spec.out_channels, rng);
      model.params[i].weights = std::move(p.weights);
      model.params[i].bias = std::move(p.bias);
    } else if (node.kind == LayerKind::dense) {
      const auto& spec = std::get<DenseSpec>(node.spec);
      auto p = DenseParams<T>::he_init(spec.in_features, spec.out_features, rng);
      model.params[i].weights = std::move(p.weights);
      model.params[i].bias = std::move(p.bias);
    }
  }
  return model;
}

template <class T>
ForwardPass<T> forward(const ModelGraph<T>& model, const Tensor<T>& image,
                       bool training, Rng* rng) {
  const GraphTopology& topo = model.topo;
  if (image.rank() != 3 || image.dim(0) != topo.input_h ||
      image.dim(1) != topo.input_w || image.dim(2) != topo.input_c) {
    throw ShapeError("forward: input shape " + shape_string(image) + " does not match (" +
                     std::to_string(topo.input_h) + ", " + std::to_string(topo.input_w) +
                     ", " + std::to_string(topo.input_c) + ")");
  }
  if (training && rng == nullptr) {
    throw ArgumentError("forward: training mode requires an rng");
  }

  const std::size_t n = topo.nodes.size();
  ForwardPass<T> pass;
  pass.training = training;
  pass.outputs.resize(n);
  pass.preacts.resize(n);
  pass.pool_state.resize(n);
  pass.dropout_state.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const LayerNode& node = topo.nodes[i];
    switch (node.kind) {
      case LayerKind::input:
        pass.outputs[i] = image;
        break;
      case LayerKind::conv: {
        Tensor<T> pre = conv2d_forward(pass.outputs[node.inputs[0]],
                                       model.params[i].weights, model.params[i].bias,
                                       Padding::same, 1);
        pass.outputs[i] = activation_forward(pre, node.activation);
        pass.preacts[i] = std::move(pre);
        break;
      }
      case LayerKind::maxpool:
      case LayerKind::avgpool: {
        auto res = pool_forward(pass.outputs[node.inputs[0]], std::get<PoolSpec>(node.spec));
        pass.outputs[i] = res.output;
        pass.pool_state[i] = std::move(res);
        break;
      }
      case LayerKind::concat: {
        std::vector<const Tensor<T>*> ins;
        ins.reserve(node.inputs.size());
        for (int j : node.inputs) ins.push_back(&pass.outputs[j]);
        pass.outputs[i] = concat_channels(ins);
        break;
      }
      case LayerKind::flatten:
        pass.outputs[i] = pass.outputs[node.inputs[0]].reshaped(
            {static_cast<int>(pass.outputs[node.inputs[0]].size())});
        break;
      case LayerKind::dropout: {
        const auto& spec = std::get<DropoutSpec>(node.spec);
        if (training) {
          auto res = dropout_forward(pass.outputs[node.inputs[0]], spec.rate, *rng, true);
          pass.outputs[i] = res.output;
          pass.dropout_state[i] = std::move(res);
        } else {
          // Inference is a pure pass-through; empty state makes backward a
          // pass-through as well.
          pass.outputs[i] = pass.outputs[node.inputs[0]];
        }
        break;
      }
      case LayerKind::dense: {
        Tensor<T> pre = dense_forward(pass.outputs[node.inputs[0]],
                                      model.params[i].weights, model.params[i].bias);
        if (node.activation == ActivationKind::softmax) {
          pass.outputs[i] = softmax(pre);
        } else {
          pass.outputs[i] = activation_forward(pre, node.activation);
        }
        pass.preacts[i] = std::move(pre);
        break;
      }
      case LayerKind::softmax:
        pass.outputs[i] = softmax(pass.outputs[node.inputs[0]]);
        break;
    }
    if (!pass.outputs[i].all_finite()) {
      throw NumericError("non-finite output at node '" + node.id + "'");
    }
  }
  pass.complete = true;
  return pass;
}

template <class T>
Tensor<T> predict(const ModelGraph<T>& model, const Tensor<T>& image) {
  return forward(model, image, false, nullptr).probs();
}

template <class T>
void Gradients<T>::accumulate(const Gradients<T>& other) {
  if (param_grads.size() != other.param_grads.size()) {
    throw ShapeError("gradient accumulation node count mismatch");
  }
  for (std::size_t i = 0; i < param_grads.size(); ++i) {
    if (!other.param_grads[i].present()) continue;
    add_into(param_grads[i].weights, other.param_grads[i].weights);
    add_into(param_grads[i].bias, other.param_grads[i].bias);
  }
  if (!other.input_grad.empty()) add_into(input_grad, other.input_grad);
}

template <class T>
void Gradients<T>::scale(T factor) {
  for (auto& p : param_grads) {
    for (T& v : p.weights.flat()) v *= factor;
    for (T& v : p.bias.flat()) v *= factor;
  }
  for (T& v : input_grad.flat()) v *= factor;
}

template <class T>
Gradients<T> backward(const ModelGraph<T>& model, const ForwardPass<T>& cache,
                      const Tensor<T>& grad_logits) {
  const GraphTopology& topo = model.topo;
  const std::size_t n = topo.nodes.size();
  if (!cache.complete || cache.outputs.size() != n) {
    throw StateError("backward: cache does not match this model");
  }
  if (grad_logits.size() != static_cast<std::size_t>(topo.num_classes)) {
    throw ShapeError("backward: grad_logits length mismatch");
  }

  Gradients<T> grads;
  grads.param_grads.resize(n);

  // Accumulated gradient at each node's output; fan-out sums naturally.
  std::vector<Tensor<T>> out_grads(n);
  out_grads[n - 1] = grad_logits;

  for (std::size_t ri = n; ri-- > 0;) {
    const LayerNode& node = topo.nodes[ri];
    Tensor<T>& g_out = out_grads[ri];
    if (g_out.empty()) continue;  // node feeds nothing that received gradient

    // Gradient through the node's activation. The softmax output node is the
    // exception: grad_logits already differentiates through softmax+loss.
    Tensor<T> g_pre;
    if (node.activation == ActivationKind::softmax) {
      g_pre = std::move(g_out);
    } else if (node.activation == ActivationKind::none) {
      g_pre = std::move(g_out);
    } else {
      g_pre = activation_backward(cache.preacts[ri], g_out, node.activation);
    }

    switch (node.kind) {
      case LayerKind::input:
        add_into(grads.input_grad, g_pre);
        break;
      case LayerKind::conv: {
        auto cg = conv2d_backward(cache.outputs[node.inputs[0]],
                                  model.params[ri].weights, g_pre, Padding::same, 1);
        grads.param_grads[ri].weights = std::move(cg.weights);
        grads.param_grads[ri].bias = std::move(cg.bias);
        add_into(out_grads[node.inputs[0]], cg.input);
        break;
      }
      case LayerKind::maxpool:
      case LayerKind::avgpool: {
        Tensor<T> gi = pool_backward(std::get<PoolSpec>(node.spec),
                                     cache.pool_state[ri], g_pre);
        add_into(out_grads[node.inputs[0]], gi);
        break;
      }
      case LayerKind::concat: {
        std::vector<int> counts;
        counts.reserve(node.inputs.size());
        for (int j : node.inputs) counts.push_back(cache.outputs[j].dim(2));
        auto slices = concat_backward(g_pre, counts);
        for (std::size_t k = 0; k < node.inputs.size(); ++k) {
          add_into(out_grads[node.inputs[k]], slices[k]);
        }
        break;
      }
      case LayerKind::flatten: {
        const Tensor<T>& upstream = cache.outputs[node.inputs[0]];
        add_into(out_grads[node.inputs[0]], g_pre.reshaped(upstream.dims()));
        break;
      }
      case LayerKind::dropout: {
        Tensor<T> gi = dropout_backward(cache.dropout_state[ri], g_pre);
        add_into(out_grads[node.inputs[0]], gi);
        break;
      }
      case LayerKind::dense: {
        auto dg = dense_backward(cache.outputs[node.inputs[0]],
                                 model.params[ri].weights, g_pre);
        grads.param_grads[ri].weights = std::move(dg.weights);
        grads.param_grads[ri].bias = std::move(dg.bias);
        add_into(out_grads[node.inputs[0]], dg.input);
        break;
      }
      case LayerKind::softmax:
        // Standalone softmax nodes are not produced by the builder; the
        // output dense node fuses softmax with the loss gradient.
        add_into(out_grads[node.inputs[0]], g_pre);
        break;
    }
  }

  if (grads.input_grad.empty()) {
    grads.input_grad = Tensor<T>({topo.input_h, topo.input_w, topo.input_c});
  }
  return grads;
}

}  // namespace torsonet
