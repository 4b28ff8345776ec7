#include "paver/tensor.hpp"

#include <algorithm>

namespace paver::nn {

std::string dims_to_string(const Dims& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

Tensor random_normal(Dims dims, Rng& rng, double stddev) {
  Tensor t(std::move(dims));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& x : t.values()) x = dist(rng);
  return t;
}

Tensor random_uniform(Dims dims, Rng& rng, double lo, double hi) {
  Tensor t(std::move(dims));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& x : t.values()) x = dist(rng);
  return t;
}

void require_finite(const Tensor& t, const std::string& stage) {
  if (!t.all_finite()) throw NumericError(stage, "non-finite value in " + dims_to_string(t.dims()));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.dims() != b.dims()) {
    throw ConfigError("shape mismatch " + dims_to_string(a.dims()) + " vs " +
                      dims_to_string(b.dims()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace paver::nn
