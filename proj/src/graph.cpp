#include "torsonet/graph.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace torsonet {

std::string activation_name(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::relu: return "ReLU";
    case ActivationKind::swish: return "Swish";
    case ActivationKind::softmax: return "SoftMax";
    case ActivationKind::none: return "";
  }
  return "";
}

std::optional<ActivationKind> parse_activation(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  if (s == "relu") return ActivationKind::relu;
  if (s == "swish") return ActivationKind::swish;
  return std::nullopt;
}

std::string format_grouped(long long value) {
  std::string digits = std::to_string(value);
  std::string out;
  int count = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (count && count % 3 == 0 && std::isdigit(static_cast<unsigned char>(*it))) {
      out.push_back(',');
    }
    out.push_back(*it);
    ++count;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::size_t LayerNode::param_count() const {
  if (kind == LayerKind::conv) {
    const auto& c = std::get<ConvSpec>(spec);
    return static_cast<std::size_t>(c.kernel_h) * c.kernel_w * c.in_channels *
               c.out_channels +
           c.out_channels;
  }
  if (kind == LayerKind::dense) {
    const auto& d = std::get<DenseSpec>(spec);
    return static_cast<std::size_t>(d.in_features) * d.out_features + d.out_features;
  }
  return 0;
}

std::string LayerNode::label() const {
  return kind == LayerKind::conv ? name + " (Conv2D)" : name;
}

int GraphTopology::node_index(std::string_view id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

std::size_t GraphTopology::param_count() const {
  std::size_t n = 0;
  for (const LayerNode& node : nodes) n += node.param_count();
  return n;
}

// ---------------------------------------------------------------------------

GraphBuilder::GraphBuilder(int input_h, int input_w, int input_c,
                           ActivationKind conv_activation) {
  if (input_h < 1 || input_w < 1 || input_c < 1) {
    throw ArgumentError("input dims must be positive");
  }
  topo_.input_h = input_h;
  topo_.input_w = input_w;
  topo_.input_c = input_c;
  topo_.conv_activation = conv_activation;
  LayerNode in;
  in.id = "input";
  in.name = "Input";
  in.kind = LayerKind::input;
  in.out_dims = {input_h, input_w, input_c};
  topo_.nodes.push_back(std::move(in));
}

int GraphBuilder::append(LayerNode node) {
  for (const LayerNode& n : topo_.nodes) {
    if (n.id == node.id) throw ArgumentError("duplicate node id '" + node.id + "'");
  }
  for (int j : node.inputs) {
    if (j < 0 || j >= static_cast<int>(topo_.nodes.size())) {
      throw ArgumentError("node '" + node.id + "' references unknown input");
    }
  }
  topo_.nodes.push_back(std::move(node));
  return static_cast<int>(topo_.nodes.size()) - 1;
}

const std::vector<int>& GraphBuilder::dims(int node) const {
  return topo_.nodes.at(node).out_dims;
}

int GraphBuilder::add_conv(const std::string& id, const std::string& name,
                           int kernel_h, int kernel_w, int out_channels, int input,
                           ActivationKind activation) {
  const auto& in_dims = dims(input);
  if (in_dims.size() != 3) throw ShapeError("conv input must be a feature map");
  LayerNode node;
  node.id = id;
  node.name = name;
  node.kind = LayerKind::conv;
  node.activation = activation;
  node.spec = ConvSpec{kernel_h, kernel_w, in_dims[2], out_channels};
  node.inputs = {input};
  node.out_dims = {in_dims[0], in_dims[1], out_channels};  // same padding, stride 1
  return append(std::move(node));
}

int GraphBuilder::add_pool(const std::string& id, const std::string& name,
                           PoolKind kind, int pool_h, int pool_w, int stride_h,
                           int stride_w, int input) {
  const auto& in_dims = dims(input);
  if (in_dims.size() != 3) throw ShapeError("pool input must be a feature map");
  // Reduced-geometry builds clamp the window to what the map offers; at the
  // native 224 input every window already fits and this is a no-op.
  pool_h = std::min(pool_h, in_dims[0]);
  pool_w = std::min(pool_w, in_dims[1]);
  const int out_h = pooled_extent(in_dims[0], pool_h, stride_h);
  const int out_w = pooled_extent(in_dims[1], pool_w, stride_w);
  if (out_h < 1 || out_w < 1) throw ShapeError("pool output extent must be >= 1");
  LayerNode node;
  node.id = id;
  node.name = name;
  node.kind = kind == PoolKind::max ? LayerKind::maxpool : LayerKind::avgpool;
  node.spec = PoolSpec{pool_h, pool_w, stride_h, stride_w, kind};
  node.inputs = {input};
  node.out_dims = {out_h, out_w, in_dims[2]};
  return append(std::move(node));
}

int GraphBuilder::add_concat(const std::string& id, const std::string& name,
                             const std::vector<int>& inputs) {
  if (inputs.size() < 2) throw ArgumentError("concat needs at least 2 inputs");
  const auto& first = dims(inputs[0]);
  int channels = 0;
  for (int j : inputs) {
    const auto& d = dims(j);
    if (d.size() != 3 || d[0] != first[0] || d[1] != first[1]) {
      throw ShapeError("concat inputs must share spatial dims");
    }
    channels += d[2];
  }
  LayerNode node;
  node.id = id;
  node.name = name;
  node.kind = LayerKind::concat;
  node.inputs = inputs;
  node.out_dims = {first[0], first[1], channels};
  return append(std::move(node));
}

int GraphBuilder::add_flatten(const std::string& id, const std::string& name,
                              int input) {
  const auto& in_dims = dims(input);
  int n = 1;
  for (int d : in_dims) n *= d;
  LayerNode node;
  node.id = id;
  node.name = name;
  node.kind = LayerKind::flatten;
  node.inputs = {input};
  node.out_dims = {n};
  return append(std::move(node));
}

int GraphBuilder::add_dropout(const std::string& id, const std::string& name,
                              double rate, int input) {
  if (rate < 0.0 || rate >= 1.0) throw ArgumentError("dropout rate must be in [0, 1)");
  LayerNode node;
  node.id = id;
  node.name = name;
  node.kind = LayerKind::dropout;
  node.spec = DropoutSpec{rate};
  node.inputs = {input};
  node.out_dims = dims(input);
  return append(std::move(node));
}

int GraphBuilder::add_dense(const std::string& id, const std::string& name, int units,
                            int input, ActivationKind activation) {
  const auto& in_dims = dims(input);
  if (in_dims.size() != 1) throw ShapeError("dense input must be a vector");
  LayerNode node;
  node.id = id;
  node.name = name;
  node.kind = LayerKind::dense;
  node.activation = activation;
  node.spec = DenseSpec{in_dims[0], units};
  node.inputs = {input};
  node.out_dims = {units};
  return append(std::move(node));
}

GraphTopology GraphBuilder::finish(int output, int num_classes, double dropout_rate) && {
  if (output != static_cast<int>(topo_.nodes.size()) - 1) {
    throw ArgumentError("output must be the last node");
  }
  const LayerNode& out = topo_.nodes.back();
  if (out.activation != ActivationKind::softmax) {
    throw ArgumentError("output node must apply softmax");
  }
  topo_.num_classes = num_classes;
  topo_.dropout_rate = dropout_rate;
  return std::move(topo_);
}

// ---------------------------------------------------------------------------
// Architecture blocks

int build_fire_block(GraphBuilder& g, int input) {
  const ActivationKind act = g.conv_activation();
  const int squeeze = g.add_conv("fire.squeeze", "Squeeze", 1, 1, 4, input, act);
  const int expand1 = g.add_conv("fire.expand1", "Expand1", 1, 1, 8, squeeze, act);
  const int expand2 = g.add_conv("fire.expand2", "Expand2", 3, 3, 8, squeeze, act);
  return g.add_concat("fire.concat", "Concatenate 1", {expand1, expand2});
}

int build_block_313(GraphBuilder& g, int input) {
  const ActivationKind act = g.conv_activation();
  const int c1 = g.add_conv("b313.c1", "C1", 1, 3, 32, input, act);
  const int c2 = g.add_conv("b313.c2", "C2", 1, 3, 32, input, act);
  const int c11 = g.add_conv("b313.c11", "C11", 3, 1, 32, c1, act);
  const int c21 = g.add_conv("b313.c21", "C21", 3, 1, 32, c2, act);
  return g.add_concat("b313.concat", "Concatenate 2", {c11, c21});
}

int build_trunk(GraphBuilder& g, int input) {
  const int pool =
      g.add_pool("trunk.maxpool1", "Max pooling 1", PoolKind::max, 4, 4, 4, 4, input);
  return g.add_conv("trunk.conv", "Convolution", 3, 3, 32, pool, g.conv_activation());
}

int build_reduction_block(GraphBuilder& g, int input) {
  const ActivationKind act = g.conv_activation();
  const int c = g.add_conv("reduction.c", "C", 1, 1, 8, input, act);
  const int c1 = g.add_conv("reduction.c1", "C1", 1, 1, 32, c, act);
  const int c2 = g.add_conv("reduction.c2", "C2", 3, 3, 32, c, act);
  const int c11 = g.add_conv("reduction.c11", "C11", 3, 3, 32, c1, act);
  const int c12 = g.add_conv("reduction.c12", "C12", 3, 3, 32, c11, act);
  // A (1,1) max pool over C2: an identity layer, kept exactly as specified;
  // the concat therefore carries C2's features twice.
  const int pool2 =
      g.add_pool("reduction.maxpool2", "Max pooling 2", PoolKind::max, 1, 1, 1, 1, c2);
  return g.add_concat("reduction.concat", "Concatenate 3", {pool2, c2, c12});
}

int build_block_31c(GraphBuilder& g, int input) {
  const ActivationKind act = g.conv_activation();
  const int pool =
      g.add_pool("b31c.maxpool3", "Max pooling 3", PoolKind::max, 4, 4, 4, 4, input);
  const int c1 = g.add_conv("b31c.c1", "C1", 1, 3, 32, pool, act);
  const int c2 = g.add_conv("b31c.c2", "C2", 1, 3, 32, pool, act);
  return g.add_concat("b31c.concat", "Concatenate 4", {c1, c2});
}

GraphTopology build_model_topology(int num_classes, ActivationKind conv_activation,
                                   double dropout_rate, int input_hw) {
  if (num_classes < 2) throw ArgumentError("num_classes must be >= 2");
  if (conv_activation != ActivationKind::relu &&
      conv_activation != ActivationKind::swish) {
    throw ArgumentError("conv activation must be relu or swish");
  }
  GraphBuilder g(input_hw, input_hw, 1, conv_activation);

  int cur = build_fire_block(g, 0);
  cur = build_block_313(g, cur);
  cur = build_trunk(g, cur);
  cur = build_reduction_block(g, cur);
  cur = build_block_31c(g, cur);

  cur = g.add_pool("head.avgpool", "Average pooling", PoolKind::average, 2, 2, 4, 4, cur);
  cur = g.add_flatten("head.flatten", "Flatten", cur);
  cur = g.add_dropout("head.dropout", "Dropout", dropout_rate, cur);
  cur = g.add_dense("head.dense1", "Dense 1", 64, cur, ActivationKind::relu);
  cur = g.add_dense("head.dense2", "Dense 2", 64, cur, ActivationKind::relu);
  cur = g.add_dense("head.dense3", "Dense 3", num_classes, cur, ActivationKind::softmax);

  return std::move(g).finish(cur, num_classes, dropout_rate);
}

// ---------------------------------------------------------------------------
// Summary

namespace {

std::string kernel_desc(const LayerNode& node) {
  switch (node.kind) {
    case LayerKind::conv: {
      const auto& c = std::get<ConvSpec>(node.spec);
      return std::to_string(c.kernel_h) + "*" + std::to_string(c.kernel_w);
    }
    case LayerKind::maxpool: {
      const auto& p = std::get<PoolSpec>(node.spec);
      return "Pool size=(" + std::to_string(p.pool_h) + "," + std::to_string(p.pool_w) +
             ")";
    }
    case LayerKind::avgpool: {
      const auto& p = std::get<PoolSpec>(node.spec);
      return "Pool size=(" + std::to_string(p.pool_h) + "," + std::to_string(p.pool_w) +
             "), stride=" + std::to_string(p.stride_h);
    }
    case LayerKind::concat:
      return "Axis=3";
    case LayerKind::dropout: {
      std::ostringstream os;
      os << "Rate=" << std::get<DropoutSpec>(node.spec).rate;
      return os.str();
    }
    default:
      return "";
  }
}

// Feature maps print as "(H, W, C)", flatten/dropout vectors as a bare
// length, dense layers in the batch-agnostic "(None, units)" form.
std::string shape_desc(LayerKind kind, const std::vector<int>& dims) {
  if (kind == LayerKind::dense) return "(None, " + std::to_string(dims[0]) + ")";
  if (dims.size() == 1) return std::to_string(dims[0]);
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(dims[i]);
  }
  return s + ")";
}

}  // namespace

std::vector<SummaryRow> summarize(const GraphTopology& topo) {
  std::vector<SummaryRow> rows;
  rows.reserve(topo.nodes.size());
  for (const LayerNode& node : topo.nodes) {
    SummaryRow row;
    row.label = node.label();
    row.kernel_desc = kernel_desc(node);
    row.activation_desc = activation_name(node.activation);
    row.kind = node.kind;
    row.output_shape = node.out_dims;
    row.params = static_cast<long>(node.param_count());
    for (int j : node.inputs) row.connected_to.push_back(topo.nodes[j].name);
    rows.push_back(std::move(row));
  }
  return rows;
}

void print_summary(std::ostream& os, const GraphTopology& topo) {
  const auto rows = summarize(topo);
  os << std::left << std::setw(22) << "Layer (type)" << std::setw(26) << "Kernel size"
     << std::setw(12) << "Activation" << std::setw(17) << "Output Shape"
     << std::setw(12) << "Parameters"
     << "Connected to\n";
  os << std::string(100, '-') << "\n";
  for (const SummaryRow& row : rows) {
    const std::string shape = shape_desc(row.kind, row.output_shape);
    std::string connected;
    for (std::size_t i = 0; i < row.connected_to.size(); ++i) {
      if (i) connected += " & ";
      connected += row.connected_to[i];
    }
    os << std::left << std::setw(22) << row.label << std::setw(26) << row.kernel_desc
       << std::setw(12) << row.activation_desc << std::setw(17) << shape
       << std::setw(12) << row.params << connected << "\n";
  }
  const long long total = static_cast<long long>(topo.param_count());
  os << std::string(100, '-') << "\n";
  os << "Total params: " << format_grouped(total) << "\n";
  os << "Trainable params: " << format_grouped(total) << "\n";
  os << "Non-trainable params: 0\n";
}

}  // namespace torsonet
