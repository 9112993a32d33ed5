#include "torsonet/serialize.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iostream>
#include <vector>

namespace torsonet {

void warn_to_stderr(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'T', 'R', 'W'};
constexpr std::uint16_t kVersion = 1;

std::uint32_t crc_table_entry(std::uint32_t i) {
  std::uint32_t c = i;
  for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
  return c;
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<unsigned char>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
public:
  Reader(const unsigned char* data, std::size_t len, std::string path)
      : data_(data), len_(len), path_(std::move(path)) {}

  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }

  const unsigned char* raw(std::size_t n) {
    need(n);
    const unsigned char* p = data_ + pos_;
    pos_ += n;
    return p;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return len_ - pos_; }

private:
  void need(std::size_t n) {
    if (pos_ + n > len_) {
      throw IoError("truncated weight archive: " + path_);
    }
  }
  const unsigned char* data_;
  std::size_t len_;
  std::size_t pos_ = 0;
  std::string path_;
};

// Parameterized node indices in declaration order.
std::vector<int> param_nodes(const GraphTopology& topo) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < topo.nodes.size(); ++i) {
    const LayerKind k = topo.nodes[i].kind;
    if (k == LayerKind::conv || k == LayerKind::dense) ids.push_back(static_cast<int>(i));
  }
  return ids;
}

std::vector<unsigned char> encode_metadata(const ModelF& model) {
  std::vector<unsigned char> meta;
  put_u32(meta, static_cast<std::uint32_t>(model.topo.num_classes));
  meta.push_back(model.topo.conv_activation == ActivationKind::swish ? 1 : 0);
  const auto nodes = param_nodes(model.topo);
  put_u32(meta, static_cast<std::uint32_t>(nodes.size()));
  for (int i : nodes) {
    const LayerNode& node = model.topo.nodes[i];
    const NodeParams<float>& p = model.params[i];
    put_u16(meta, static_cast<std::uint16_t>(node.id.size()));
    for (char c : node.id) meta.push_back(static_cast<unsigned char>(c));
    meta.push_back(static_cast<unsigned char>(p.weights.rank()));
    for (int d = 0; d < p.weights.rank(); ++d) {
      put_u32(meta, static_cast<std::uint32_t>(p.weights.dim(d)));
    }
    put_u32(meta, static_cast<std::uint32_t>(p.bias.size()));
  }
  return meta;
}

}  // namespace

std::uint32_t crc32(const unsigned char* data, std::size_t len) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) t[i] = crc_table_entry(i);
    return t;
  }();
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) {
    c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  }
  return c ^ 0xFFFFFFFFu;
}

std::size_t archive_overhead_bytes(const GraphTopology& topo) {
  std::size_t meta = 4 + 1 + 4;  // num_classes, activation, node count
  for (const LayerNode& node : topo.nodes) {
    if (node.kind != LayerKind::conv && node.kind != LayerKind::dense) continue;
    const std::size_t rank = node.kind == LayerKind::conv ? 4 : 2;
    meta += 2 + node.id.size() + 1 + 4 * rank + 4;
  }
  return 4 + 2 + 4 + meta + 4;  // magic, version, meta length prefix, meta, crc
}

void save_weights(const ModelF& model, const std::filesystem::path& path) {
  std::vector<unsigned char> meta = encode_metadata(model);

  std::vector<unsigned char> payload;
  payload.reserve(model.param_count() * 4);
  for (int i : param_nodes(model.topo)) {
    for (float v : model.params[i].weights.flat()) put_f32(payload, v);
    for (float v : model.params[i].bias.flat()) put_f32(payload, v);
  }

  std::vector<unsigned char> blob;
  blob.reserve(12 + meta.size() + payload.size());
  blob.insert(blob.end(), kMagic.begin(), kMagic.end());
  put_u16(blob, kVersion);
  put_u32(blob, static_cast<std::uint32_t>(meta.size()));
  blob.insert(blob.end(), meta.begin(), meta.end());
  blob.insert(blob.end(), payload.begin(), payload.end());
  put_u32(blob, crc32(payload.data(), payload.size()));

  // Write via a temp file so a failed save never leaves a partial archive.
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out.write(reinterpret_cast<const char*>(blob.data()),
              static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ModelF load_weights(const std::filesystem::path& path,
                    std::optional<ActivationKind> requested, const WarnFn& warn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight archive: " + path.string());
  std::vector<unsigned char> blob((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  Reader r(blob.data(), blob.size(), path.string());

  if (r.str(4) != std::string(kMagic.data(), 4)) {
    throw FormatError("bad magic in weight archive: " + path.string());
  }
  const std::uint16_t version = r.u16();
  if (version != kVersion) {
    throw FormatError("unsupported archive version " + std::to_string(version) + ": " +
                      path.string());
  }
  const std::uint32_t meta_len = r.u32();
  const std::size_t meta_end = r.pos() + meta_len;

  const std::uint32_t num_classes = r.u32();
  const unsigned char act_byte = r.raw(1)[0];
  if (act_byte > 1) throw FormatError("unknown activation code in archive");
  const ActivationKind file_act =
      act_byte == 1 ? ActivationKind::swish : ActivationKind::relu;
  if (requested && *requested != file_act) {
    warn("archive stores " + activation_name(file_act) + " weights; the requested " +
         activation_name(*requested) + " setting is ignored");
  }
  if (num_classes < 2) throw FormatError("archive num_classes must be >= 2");

  ModelF model;
  model.topo = build_model_topology(static_cast<int>(num_classes), file_act);
  model.params.resize(model.topo.nodes.size());
  const auto nodes = param_nodes(model.topo);

  const std::uint32_t node_count = r.u32();
  if (node_count != nodes.size()) {
    throw FormatError("archive node count does not match the architecture");
  }

  struct Block {
    int node;
    std::vector<int> weight_dims;
    std::uint32_t bias_len;
  };
  std::vector<Block> blocks;
  blocks.reserve(node_count);
  for (std::uint32_t k = 0; k < node_count; ++k) {
    const std::uint16_t id_len = r.u16();
    const std::string id = r.str(id_len);
    const int node = nodes[k];
    if (model.topo.nodes[node].id != id) {
      throw FormatError("archive node '" + id + "' does not match expected '" +
                        model.topo.nodes[node].id + "'");
    }
    const unsigned char rank = r.raw(1)[0];
    std::vector<int> dims(rank);
    for (unsigned char d = 0; d < rank; ++d) dims[d] = static_cast<int>(r.u32());
    const std::uint32_t bias_len = r.u32();
    blocks.push_back({node, std::move(dims), bias_len});
  }
  if (r.pos() != meta_end) throw FormatError("archive metadata length mismatch");

  std::size_t payload_floats = 0;
  for (const Block& b : blocks) {
    std::size_t n = 1;
    for (int d : b.weight_dims) n *= static_cast<std::size_t>(d);
    payload_floats += n + b.bias_len;
  }
  if (r.remaining() < payload_floats * 4 + 4) {
    throw IoError("truncated weight archive: " + path.string());
  }
  const unsigned char* payload = r.raw(payload_floats * 4);
  const std::uint32_t stored_crc = r.u32();
  const std::uint32_t actual_crc = crc32(payload, payload_floats * 4);
  if (stored_crc != actual_crc) {
    throw CorruptionError("weight archive checksum mismatch: " + path.string());
  }

  Reader pr(payload, payload_floats * 4, path.string());
  for (const Block& b : blocks) {
    NodeParams<float>& p = model.params[b.node];
    Tensor<float> w(b.weight_dims);
    const std::size_t expected = [&] {
      const LayerNode& node = model.topo.nodes[b.node];
      return node.param_count();
    }();
    if (w.size() + b.bias_len != expected) {
      throw FormatError("archive parameter shape mismatch at node '" +
                        model.topo.nodes[b.node].id + "'");
    }
    for (float& v : w.flat()) v = pr.f32();
    Tensor<float> bias({static_cast<int>(b.bias_len)});
    for (float& v : bias.flat()) v = pr.f32();
    p.weights = std::move(w);
    p.bias = std::move(bias);
  }
  return model;
}

}  // namespace torsonet
