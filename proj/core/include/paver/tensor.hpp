#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "paver/errors.hpp"

namespace paver::nn {

using Dims = std::vector<std::size_t>;

std::string dims_to_string(const Dims& dims);

inline std::size_t dims_product(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

/// Dense row-major array. Value semantics; the product of dims always equals
/// the element count.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Dims dims, T fill = T{})
      : dims_(std::move(dims)), data_(dims_product(dims_), fill) {}
  BasicTensor(Dims dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data)) {
    if (data_.size() != dims_product(dims_)) {
      throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                        " does not match dims " + dims_to_string(dims_));
    }
  }

  static BasicTensor zeros_like(const BasicTensor& other) { return BasicTensor(other.dims_); }

  const Dims& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rows() const { return dims_.at(0); }
  std::size_t cols() const { return dims_.at(1); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * dims_[1] + j]; }
  T& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }

  std::span<T> row(std::size_t i) {
    const std::size_t n = size() / dims_.at(0);
    return std::span<T>(data_).subspan(i * n, n);
  }
  std::span<const T> row(std::size_t i) const {
    const std::size_t n = size() / dims_.at(0);
    return std::span<const T>(data_).subspan(i * n, n);
  }

  BasicTensor reshaped(Dims dims) const& { return BasicTensor(std::move(dims), data_); }
  BasicTensor reshaped(Dims dims) && { return BasicTensor(std::move(dims), std::move(data_)); }

  bool all_finite() const {
    for (const T& x : data_) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  Dims dims_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<double>;
using TensorF = BasicTensor<float>;

template <typename To, typename From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& in) {
  std::vector<To> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<To>(in[i]);
  return BasicTensor<To>(in.dims(), std::move(out));
}

/// Deterministic per-build generator shared by all seeded routines.
using Rng = std::mt19937_64;

Tensor random_normal(Dims dims, Rng& rng, double stddev);
Tensor random_uniform(Dims dims, Rng& rng, double lo, double hi);

/// Throws NumericError naming `stage` if any element is non-finite.
void require_finite(const Tensor& t, const std::string& stage);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace paver::nn
