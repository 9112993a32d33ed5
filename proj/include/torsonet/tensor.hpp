#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "torsonet/error.hpp"

namespace torsonet {

// Dense numeric array. Feature maps are rank-3 (height, width, channels) in
// row-major order with channels innermost; vectors are rank-1. Weights reuse
// the same container at rank 4 (kh, kw, in_c, out_c) and rank 2 (in, out).
template <class T>
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(std::vector<int> dims) : dims_(std::move(dims)) {
    std::size_t n = 1;
    for (int d : dims_) {
      if (d <= 0) throw ShapeError("tensor extent must be positive");
      n *= static_cast<std::size_t>(d);
    }
    data_.assign(n, T{0});
  }

  Tensor(std::initializer_list<int> dims) : Tensor(std::vector<int>(dims)) {}

  static Tensor zeros(std::vector<int> dims) { return Tensor(std::move(dims)); }

  static Tensor full(std::vector<int> dims, T v) {
    Tensor t(std::move(dims));
    for (T& x : t.data_) x = v;
    return t;
  }

  const std::vector<int>& dims() const { return dims_; }
  int dim(std::size_t i) const { return dims_[i]; }
  int rank() const { return static_cast<int>(dims_.size()); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> flat() { return {data_.data(), data_.size()}; }
  std::span<const T> flat() const { return {data_.data(), data_.size()}; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Rank-3 accessors (y, x, c); hot paths index raw pointers instead.
  T& at(int y, int x, int c) {
    return data_[(static_cast<std::size_t>(y) * dims_[1] + x) * dims_[2] + c];
  }
  const T& at(int y, int x, int c) const {
    return data_[(static_cast<std::size_t>(y) * dims_[1] + x) * dims_[2] + c];
  }

  bool same_dims(const Tensor& o) const { return dims_ == o.dims_; }

  bool all_finite() const {
    for (const T& x : data_) {
      if (!std::isfinite(static_cast<double>(x))) return false;
    }
    return true;
  }

  // Reinterprets the buffer with new extents of equal element count.
  Tensor reshaped(std::vector<int> dims) const {
    Tensor t;
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    if (n != data_.size()) throw ShapeError("reshape changes element count");
    t.dims_ = std::move(dims);
    t.data_ = data_;
    return t;
  }

private:
  std::vector<int> dims_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <class T>
std::string shape_string(const Tensor<T>& t) {
  std::string s = "(";
  for (int i = 0; i < t.rank(); ++i) {
    if (i) s += ", ";
    s += std::to_string(t.dim(i));
  }
  return s + ")";
}

// Accumulates src into dst, allocating dst on first use.
template <class T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  if (dst.empty()) {
    dst = src;
    return;
  }
  if (!dst.same_dims(src)) throw ShapeError("gradient accumulation shape mismatch");
  T* d = dst.data();
  const T* s = src.data();
  for (std::size_t i = 0, n = dst.size(); i < n; ++i) d[i] += s[i];
}

}  // namespace torsonet
