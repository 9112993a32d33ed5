#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "torsonet/rng.hpp"
#include "torsonet/tensor.hpp"

namespace torsonet {

enum class Padding { same, valid };
enum class PoolKind { max, average };
enum class ActivationKind { none, relu, swish, softmax };

template <class T>
struct ConvParams {
  Tensor<T> weights;  // (kh, kw, in_c, out_c)
  Tensor<T> bias;     // (out_c)

  int kernel_h() const { return weights.dim(0); }
  int kernel_w() const { return weights.dim(1); }
  int in_channels() const { return weights.dim(2); }
  int out_channels() const { return weights.dim(3); }

  std::size_t param_count() const { return weights.size() + bias.size(); }

  // Fan-in scaled normal weights, zero biases.
  static ConvParams he_init(int kh, int kw, int in_c, int out_c, Rng& rng) {
    ConvParams p;
    p.weights = Tensor<T>({kh, kw, in_c, out_c});
    p.bias = Tensor<T>({out_c});
    const double stddev = std::sqrt(2.0 / (static_cast<double>(kh) * kw * in_c));
    for (T& w : p.weights.flat()) w = static_cast<T>(rng.normal() * stddev);
    return p;
  }
};

template <class T>
struct DenseParams {
  Tensor<T> weights;  // (in_features, out_features)
  Tensor<T> bias;     // (out_features)

  int in_features() const { return weights.dim(0); }
  int out_features() const { return weights.dim(1); }

  std::size_t param_count() const { return weights.size() + bias.size(); }

  static DenseParams he_init(int in_f, int out_f, Rng& rng) {
    DenseParams p;
    p.weights = Tensor<T>({in_f, out_f});
    p.bias = Tensor<T>({out_f});
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_f));
    for (T& w : p.weights.flat()) w = static_cast<T>(rng.normal() * stddev);
    return p;
  }
};

struct PoolSpec {
  int pool_h = 1;
  int pool_w = 1;
  int stride_h = 1;
  int stride_w = 1;
  PoolKind kind = PoolKind::max;
};

inline int pooled_extent(int in, int pool, int stride) {
  return (in - pool) / stride + 1;
}

// ---------------------------------------------------------------------------
// Convolution

template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights,
                         const Tensor<T>& bias, Padding padding, int stride) {
  if (input.rank() != 3) throw ShapeError("conv2d input must be rank 3");
  if (weights.rank() != 4) throw ShapeError("conv2d weights must be rank 4");
  const int in_h = input.dim(0), in_w = input.dim(1), in_c = input.dim(2);
  const int kh = weights.dim(0), kw = weights.dim(1);
  const int out_c = weights.dim(3);
  if (weights.dim(2) != in_c) {
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(in_c) +
                     ", kernel expects " + std::to_string(weights.dim(2)));
  }
  if (stride < 1) throw ArgumentError("conv2d stride must be positive");
  if (padding == Padding::same && stride != 1) {
    throw ArgumentError("conv2d same padding requires stride 1");
  }

  int out_h, out_w, pad_top, pad_left;
  if (padding == Padding::same) {
    out_h = in_h;
    out_w = in_w;
    pad_top = (kh - 1) / 2;
    pad_left = (kw - 1) / 2;
  } else {
    if (kh > in_h || kw > in_w) throw ShapeError("conv2d kernel larger than input");
    out_h = (in_h - kh) / stride + 1;
    out_w = (in_w - kw) / stride + 1;
    pad_top = 0;
    pad_left = 0;
  }

  Tensor<T> out({out_h, out_w, out_c});
  const T* in_p = input.data();
  const T* w_p = weights.data();
  const T* b_p = bias.data();
  T* out_p = out.data();

  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      T* o = out_p + (static_cast<std::size_t>(oy) * out_w + ox) * out_c;
      for (int co = 0; co < out_c; ++co) o[co] = b_p[co];
      const int base_y = oy * stride - pad_top;
      const int base_x = ox * stride - pad_left;
      for (int dy = 0; dy < kh; ++dy) {
        const int iy = base_y + dy;
        if (iy < 0 || iy >= in_h) continue;
        for (int dx = 0; dx < kw; ++dx) {
          const int ix = base_x + dx;
          if (ix < 0 || ix >= in_w) continue;
          const T* px = in_p + (static_cast<std::size_t>(iy) * in_w + ix) * in_c;
          const T* wk = w_p + (static_cast<std::size_t>(dy) * kw + dx) * in_c * out_c;
          for (int ci = 0; ci < in_c; ++ci) {
            const T v = px[ci];
            const T* wr = wk + static_cast<std::size_t>(ci) * out_c;
            for (int co = 0; co < out_c; ++co) o[co] += v * wr[co];
          }
        }
      }
    }
  }
  return out;
}

template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvParams<T>& params,
                         Padding padding, int stride) {
  return conv2d_forward(input, params.weights, params.bias, padding, stride);
}

template <class T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

template <class T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights,
                             const Tensor<T>& grad_out, Padding padding, int stride) {
  const int in_h = input.dim(0), in_w = input.dim(1), in_c = input.dim(2);
  const int kh = weights.dim(0), kw = weights.dim(1);
  const int out_c = weights.dim(3);
  if (weights.dim(2) != in_c) throw ShapeError("conv2d_backward channel mismatch");

  int out_h, out_w, pad_top, pad_left;
  if (padding == Padding::same) {
    out_h = in_h;
    out_w = in_w;
    pad_top = (kh - 1) / 2;
    pad_left = (kw - 1) / 2;
  } else {
    out_h = (in_h - kh) / stride + 1;
    out_w = (in_w - kw) / stride + 1;
    pad_top = 0;
    pad_left = 0;
  }
  if (grad_out.rank() != 3 || grad_out.dim(0) != out_h || grad_out.dim(1) != out_w ||
      grad_out.dim(2) != out_c) {
    throw ShapeError("conv2d_backward grad shape mismatch");
  }

  ConvGrads<T> g;
  g.input = Tensor<T>({in_h, in_w, in_c});
  g.weights = Tensor<T>({kh, kw, in_c, out_c});
  g.bias = Tensor<T>({out_c});

  const T* in_p = input.data();
  const T* w_p = weights.data();
  const T* go_p = grad_out.data();
  T* gi_p = g.input.data();
  T* gw_p = g.weights.data();
  T* gb_p = g.bias.data();

  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const T* go = go_p + (static_cast<std::size_t>(oy) * out_w + ox) * out_c;
      for (int co = 0; co < out_c; ++co) gb_p[co] += go[co];
      const int base_y = oy * stride - pad_top;
      const int base_x = ox * stride - pad_left;
      for (int dy = 0; dy < kh; ++dy) {
        const int iy = base_y + dy;
        if (iy < 0 || iy >= in_h) continue;
        for (int dx = 0; dx < kw; ++dx) {
          const int ix = base_x + dx;
          if (ix < 0 || ix >= in_w) continue;
          const std::size_t px_off = (static_cast<std::size_t>(iy) * in_w + ix) * in_c;
          const std::size_t wk_off = (static_cast<std::size_t>(dy) * kw + dx) * in_c * out_c;
          const T* px = in_p + px_off;
          T* gi = gi_p + px_off;
          for (int ci = 0; ci < in_c; ++ci) {
            const T v = px[ci];
            const T* wr = w_p + wk_off + static_cast<std::size_t>(ci) * out_c;
            T* gwr = gw_p + wk_off + static_cast<std::size_t>(ci) * out_c;
            T acc = 0;
            for (int co = 0; co < out_c; ++co) {
              gwr[co] += v * go[co];
              acc += wr[co] * go[co];
            }
            gi[ci] += acc;
          }
        }
      }
    }
  }
  return g;
}

template <class T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const ConvParams<T>& params,
                             const Tensor<T>& grad_out, Padding padding, int stride) {
  return conv2d_backward(input, params.weights, grad_out, padding, stride);
}

// ---------------------------------------------------------------------------
// Pooling

template <class T>
struct PoolResult {
  Tensor<T> output;
  std::vector<int> in_dims;
  std::vector<std::int32_t> argmax;  // flat input index per output cell; max kind only
};

template <class T>
PoolResult<T> pool_forward(const Tensor<T>& input, const PoolSpec& spec) {
  if (input.rank() != 3) throw ShapeError("pool input must be rank 3");
  const int in_h = input.dim(0), in_w = input.dim(1), ch = input.dim(2);
  if (spec.pool_h > in_h || spec.pool_w > in_w) {
    throw ShapeError("pool window larger than input");
  }
  const int out_h = pooled_extent(in_h, spec.pool_h, spec.stride_h);
  const int out_w = pooled_extent(in_w, spec.pool_w, spec.stride_w);

  PoolResult<T> res;
  res.output = Tensor<T>({out_h, out_w, ch});
  res.in_dims = input.dims();
  const bool is_max = spec.kind == PoolKind::max;
  if (is_max) res.argmax.resize(res.output.size());

  const T* in_p = input.data();
  T* out_p = res.output.data();
  const T inv_area = static_cast<T>(1) / static_cast<T>(spec.pool_h * spec.pool_w);

  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const std::size_t o_off = (static_cast<std::size_t>(oy) * out_w + ox) * ch;
      T* o = out_p + o_off;
      const int y0 = oy * spec.stride_h;
      const int x0 = ox * spec.stride_w;
      if (is_max) {
        std::int32_t* arg = res.argmax.data() + o_off;
        // First window cell seeds the running max; later cells must be
        // strictly greater to win, so row-major first occurrence holds ties.
        for (int dy = 0; dy < spec.pool_h; ++dy) {
          for (int dx = 0; dx < spec.pool_w; ++dx) {
            const std::size_t i_off =
                (static_cast<std::size_t>(y0 + dy) * in_w + (x0 + dx)) * ch;
            const T* px = in_p + i_off;
            if (dy == 0 && dx == 0) {
              for (int c = 0; c < ch; ++c) {
                o[c] = px[c];
                arg[c] = static_cast<std::int32_t>(i_off + c);
              }
            } else {
              for (int c = 0; c < ch; ++c) {
                if (px[c] > o[c]) {
                  o[c] = px[c];
                  arg[c] = static_cast<std::int32_t>(i_off + c);
                }
              }
            }
          }
        }
      } else {
        for (int c = 0; c < ch; ++c) o[c] = 0;
        for (int dy = 0; dy < spec.pool_h; ++dy) {
          for (int dx = 0; dx < spec.pool_w; ++dx) {
            const T* px =
                in_p + (static_cast<std::size_t>(y0 + dy) * in_w + (x0 + dx)) * ch;
            for (int c = 0; c < ch; ++c) o[c] += px[c];
          }
        }
        for (int c = 0; c < ch; ++c) o[c] *= inv_area;
      }
    }
  }
  return res;
}

// Max routes each gradient to its recorded argmax cell; average spreads
// grad/(ph*pw) over the window. Cells no window covers stay zero.
template <class T>
Tensor<T> pool_backward(const PoolSpec& spec, const PoolResult<T>& saved,
                        const Tensor<T>& grad_out) {
  if (saved.in_dims.size() != 3) throw StateError("pool_backward: missing forward state");
  if (!grad_out.same_dims(saved.output)) {
    throw ShapeError("pool_backward grad shape mismatch");
  }
  const int in_w = saved.in_dims[1];
  const int ch = saved.in_dims[2];
  const int out_h = grad_out.dim(0), out_w = grad_out.dim(1);

  Tensor<T> grad_in(saved.in_dims);
  T* gi = grad_in.data();
  const T* go = grad_out.data();

  if (spec.kind == PoolKind::max) {
    if (saved.argmax.size() != grad_out.size()) {
      throw StateError("pool_backward: argmax state mismatch");
    }
    for (std::size_t i = 0, n = grad_out.size(); i < n; ++i) {
      gi[saved.argmax[i]] += go[i];
    }
  } else {
    const T inv_area = static_cast<T>(1) / static_cast<T>(spec.pool_h * spec.pool_w);
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        const T* g = go + (static_cast<std::size_t>(oy) * out_w + ox) * ch;
        const int y0 = oy * spec.stride_h;
        const int x0 = ox * spec.stride_w;
        for (int dy = 0; dy < spec.pool_h; ++dy) {
          for (int dx = 0; dx < spec.pool_w; ++dx) {
            T* px = gi + (static_cast<std::size_t>(y0 + dy) * in_w + (x0 + dx)) * ch;
            for (int c = 0; c < ch; ++c) px[c] += g[c] * inv_area;
          }
        }
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Channel concatenation

template <class T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& inputs) {
  if (inputs.size() < 2) throw ArgumentError("concat_channels needs at least 2 inputs");
  const int h = inputs[0]->dim(0), w = inputs[0]->dim(1);
  int total_c = 0;
  for (const Tensor<T>* t : inputs) {
    if (t->rank() != 3) throw ShapeError("concat input must be rank 3");
    if (t->dim(0) != h || t->dim(1) != w) {
      throw ShapeError("concat spatial dims mismatch");
    }
    total_c += t->dim(2);
  }
  Tensor<T> out({h, w, total_c});
  T* o = out.data();
  const std::size_t pixels = static_cast<std::size_t>(h) * w;
  for (std::size_t p = 0; p < pixels; ++p) {
    T* dst = o + p * total_c;
    for (const Tensor<T>* t : inputs) {
      const int c = t->dim(2);
      const T* src = t->data() + p * c;
      std::copy(src, src + c, dst);
      dst += c;
    }
  }
  return out;
}

template <class T>
std::vector<Tensor<T>> concat_backward(const Tensor<T>& grad_out,
                                       const std::vector<int>& channel_counts) {
  const int h = grad_out.dim(0), w = grad_out.dim(1);
  int total_c = 0;
  for (int c : channel_counts) total_c += c;
  if (total_c != grad_out.dim(2)) throw ShapeError("concat_backward channel mismatch");

  std::vector<Tensor<T>> grads;
  grads.reserve(channel_counts.size());
  for (int c : channel_counts) grads.emplace_back(std::vector<int>{h, w, c});

  const T* g = grad_out.data();
  const std::size_t pixels = static_cast<std::size_t>(h) * w;
  for (std::size_t p = 0; p < pixels; ++p) {
    const T* src = g + p * total_c;
    for (std::size_t k = 0; k < channel_counts.size(); ++k) {
      const int c = channel_counts[k];
      std::copy(src, src + c, grads[k].data() + p * c);
      src += c;
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Activations

template <class T>
T sigmoid(T x) {
  return static_cast<T>(1) / (static_cast<T>(1) + std::exp(-x));
}

template <class T>
Tensor<T> activation_forward(const Tensor<T>& x, ActivationKind kind) {
  Tensor<T> out(x.dims());
  const T* in = x.data();
  T* o = out.data();
  const std::size_t n = x.size();
  switch (kind) {
    case ActivationKind::relu:
      for (std::size_t i = 0; i < n; ++i) o[i] = in[i] > 0 ? in[i] : T{0};
      break;
    case ActivationKind::swish:
      for (std::size_t i = 0; i < n; ++i) o[i] = in[i] * sigmoid(in[i]);
      break;
    case ActivationKind::none:
      std::copy(in, in + n, o);
      break;
    case ActivationKind::softmax:
      throw ArgumentError("softmax is not an elementwise activation");
  }
  return out;
}

// Derivative taken at the pre-activation values.
template <class T>
Tensor<T> activation_backward(const Tensor<T>& preact, const Tensor<T>& grad_out,
                              ActivationKind kind) {
  if (!preact.same_dims(grad_out)) throw ShapeError("activation_backward shape mismatch");
  Tensor<T> g(grad_out.dims());
  const T* x = preact.data();
  const T* go = grad_out.data();
  T* o = g.data();
  const std::size_t n = g.size();
  switch (kind) {
    case ActivationKind::relu:
      // d/dx relu = 1 for x > 0, else 0 (including x == 0).
      for (std::size_t i = 0; i < n; ++i) o[i] = x[i] > 0 ? go[i] : T{0};
      break;
    case ActivationKind::swish:
      for (std::size_t i = 0; i < n; ++i) {
        const T s = sigmoid(x[i]);
        o[i] = go[i] * (s + x[i] * s * (static_cast<T>(1) - s));
      }
      break;
    case ActivationKind::none:
      std::copy(go, go + n, o);
      break;
    case ActivationKind::softmax:
      throw ArgumentError("softmax backward is fused with the loss");
  }
  return g;
}

// ---------------------------------------------------------------------------
// Dense

template <class T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& weights,
                        const Tensor<T>& bias) {
  if (x.rank() != 1 || x.dim(0) != weights.dim(0)) {
    throw ShapeError("dense input length mismatch: got " +
                     std::to_string(x.size()) + ", expected " +
                     std::to_string(weights.dim(0)));
  }
  const int in_f = weights.dim(0), out_f = weights.dim(1);
  Tensor<T> y({out_f});
  const T* w = weights.data();
  const T* b = bias.data();
  const T* xp = x.data();
  T* yp = y.data();
  for (int o = 0; o < out_f; ++o) yp[o] = b[o];
  for (int i = 0; i < in_f; ++i) {
    const T v = xp[i];
    const T* wr = w + static_cast<std::size_t>(i) * out_f;
    for (int o = 0; o < out_f; ++o) yp[o] += v * wr[o];
  }
  return y;
}

template <class T>
Tensor<T> dense_forward(const Tensor<T>& x, const DenseParams<T>& params) {
  return dense_forward(x, params.weights, params.bias);
}

template <class T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

template <class T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& weights,
                             const Tensor<T>& grad_out) {
  if (grad_out.rank() != 1 || grad_out.dim(0) != weights.dim(1)) {
    throw ShapeError("dense_backward grad length mismatch");
  }
  const int in_f = weights.dim(0), out_f = weights.dim(1);
  DenseGrads<T> g;
  g.input = Tensor<T>({in_f});
  g.weights = Tensor<T>({in_f, out_f});
  g.bias = grad_out;
  const T* w = weights.data();
  const T* go = grad_out.data();
  const T* xp = x.data();
  for (int i = 0; i < in_f; ++i) {
    const T v = xp[i];
    const T* wr = w + static_cast<std::size_t>(i) * out_f;
    T* gwr = g.weights.data() + static_cast<std::size_t>(i) * out_f;
    T acc = 0;
    for (int o = 0; o < out_f; ++o) {
      gwr[o] = v * go[o];
      acc += wr[o] * go[o];
    }
    g.input[i] = acc;
  }
  return g;
}

template <class T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const DenseParams<T>& params,
                             const Tensor<T>& grad_out) {
  return dense_backward(x, params.weights, grad_out);
}

// ---------------------------------------------------------------------------
// Softmax, dropout, loss

template <class T>
Tensor<T> softmax(const Tensor<T>& x) {
  if (x.rank() != 1 || x.dim(0) < 2) throw ArgumentError("softmax needs a vector of K >= 2");
  Tensor<T> out(x.dims());
  const T* xp = x.data();
  T* o = out.data();
  const std::size_t n = x.size();
  T mx = xp[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, xp[i]);
  T sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    o[i] = std::exp(xp[i] - mx);
    sum += o[i];
  }
  const T inv = static_cast<T>(1) / sum;
  for (std::size_t i = 0; i < n; ++i) o[i] *= inv;
  return out;
}

template <class T>
struct DropoutResult {
  Tensor<T> output;
  Tensor<T> mask;  // per-element scale (0 or 1/(1-rate)); empty in inference mode
};

// Inverted dropout: survivors are rescaled at train time so that inference
// is a plain pass-through.
template <class T>
DropoutResult<T> dropout_forward(const Tensor<T>& x, double rate, Rng& rng,
                                 bool training) {
  if (rate < 0.0 || rate >= 1.0) throw ArgumentError("dropout rate must be in [0, 1)");
  DropoutResult<T> res;
  if (!training || rate == 0.0) {
    res.output = x;
    if (training) res.mask = Tensor<T>::full(x.dims(), T{1});
    return res;
  }
  res.output = Tensor<T>(x.dims());
  res.mask = Tensor<T>(x.dims());
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  const T* xp = x.data();
  T* o = res.output.data();
  T* m = res.mask.data();
  for (std::size_t i = 0, n = x.size(); i < n; ++i) {
    const T s = rng.uniform() < rate ? T{0} : scale;
    m[i] = s;
    o[i] = xp[i] * s;
  }
  return res;
}

template <class T>
Tensor<T> dropout_backward(const DropoutResult<T>& saved, const Tensor<T>& grad_out) {
  if (saved.mask.empty()) return grad_out;  // inference-mode pass-through
  if (!saved.mask.same_dims(grad_out)) throw ShapeError("dropout_backward shape mismatch");
  Tensor<T> g(grad_out.dims());
  const T* m = saved.mask.data();
  const T* go = grad_out.data();
  T* o = g.data();
  for (std::size_t i = 0, n = g.size(); i < n; ++i) o[i] = go[i] * m[i];
  return g;
}

template <class T>
struct LossResult {
  T loss;
  Tensor<T> grad_logits;  // softmax+CE fused gradient: probs - onehot(label)
};

template <class T>
LossResult<T> cross_entropy_loss(const Tensor<T>& probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw ArgumentError("cross_entropy label out of range");
  }
  LossResult<T> res;
  res.loss = static_cast<T>(-std::log(static_cast<double>(probs[label]) + 1e-12));
  res.grad_logits = probs;
  res.grad_logits[label] -= static_cast<T>(1);
  return res;
}

}  // namespace torsonet
