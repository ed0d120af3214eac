#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "drsl/errors.hpp"

namespace drsl {

// Dense row-major tensor; rank 1 or 2 everywhere in this project.
template <typename T>
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<T> data;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(std::vector<int64_t> s, std::vector<T> d, bool rg = false)
      : shape(std::move(s)), data(std::move(d)), requires_grad(rg) {
    if (numel() != int64_t(data.size())) {
      throw DimensionError("tensor data size " + std::to_string(data.size()) +
                           " does not match shape " + shape_str());
    }
  }

  static Tensor zeros(std::vector<int64_t> s) {
    int64_t n = 1;
    for (int64_t v : s) n *= v;
    return Tensor(std::move(s), std::vector<T>(size_t(n), T(0)));
  }

  static Tensor full(std::vector<int64_t> s, T value) {
    int64_t n = 1;
    for (int64_t v : s) n *= v;
    return Tensor(std::move(s), std::vector<T>(size_t(n), value));
  }

  static Tensor scalar(T value) { return Tensor({1}, {value}); }

  static Tensor vec(std::vector<T> d) {
    int64_t n = int64_t(d.size());
    return Tensor({n}, std::move(d));
  }

  static Tensor mat(int64_t rows, int64_t cols, std::vector<T> d) {
    return Tensor({rows, cols}, std::move(d));
  }

  int64_t numel() const {
    int64_t n = 1;
    for (int64_t v : shape) n *= v;
    return shape.empty() ? 0 : n;
  }

  int rank() const { return int(shape.size()); }
  // rank-1 tensors count as a single row
  int64_t rows() const { return rank() == 2 ? shape[0] : 1; }
  int64_t cols() const { return rank() == 2 ? shape[1] : shape[0]; }

  T& at(int64_t r, int64_t c) { return data[size_t(r * cols() + c)]; }
  T at(int64_t r, int64_t c) const { return data[size_t(r * cols() + c)]; }
  T& operator[](size_t i) { return data[i]; }
  T operator[](size_t i) const { return data[i]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (T v : data) {
      if (!std::isfinite(double(v))) return false;
    }
    return true;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) os << 'x';
      os << shape[i];
    }
    os << ']';
    return os.str();
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data.size());
    for (size_t i = 0; i < data.size(); ++i) out[i] = U(data[i]);
    return Tensor<U>(shape, std::move(out), requires_grad);
  }

  double l2_norm() const {
    double acc = 0;
    for (T v : data) acc += double(v) * double(v);
    return std::sqrt(acc);
  }
};

template <typename T>
inline bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape != b.shape) return false;
  for (size_t i = 0; i < a.data.size(); ++i) {
    if (std::memcmp(&a.data[i], &b.data[i], sizeof(T)) != 0) return false;
  }
  return true;
}

}  // namespace drsl
