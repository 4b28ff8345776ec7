#pragma once

// Transformer building blocks shared by the encoder and the fusion module.
// Linear weights are stored [out, in] so y = x W^T + b, which matches common
// checkpoint layouts.

#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "paver/autodiff.hpp"
#include "paver/tensor.hpp"

namespace paver::nn {

/// Mutable (name, tensor) view over a parameter set, in a fixed order.
using NamedParams = std::vector<std::pair<std::string, Tensor*>>;

struct LinearParams {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]

  static LinearParams init(std::size_t in, std::size_t out, Rng& rng, double stddev);
  static LinearParams zeros(std::size_t in, std::size_t out);
  void collect(const std::string& prefix, NamedParams& out);
};

struct LayerNormParams {
  Tensor gain;
  Tensor shift;
  double eps = 1e-6;

  static LayerNormParams identity(std::size_t width, double eps = 1e-6);
  void collect(const std::string& prefix, NamedParams& out);
};

struct AttentionParams {
  LinearParams q, k, v, o;
  int n_heads = 1;

  static AttentionParams init(std::size_t width, int n_heads, Rng& rng, double stddev);
  std::size_t width() const { return q.weight.rows(); }
  void collect(const std::string& prefix, NamedParams& out);
};

/// Two fully connected layers with a GELU between them.
struct MlpParams {
  LinearParams fc1, fc2;

  static MlpParams init(std::size_t width, std::size_t hidden, Rng& rng, double stddev);
  void collect(const std::string& prefix, NamedParams& out);
};

/// Maps parameter tensors onto tape variables: leaves when trainable,
/// constants otherwise. Each tensor is bound once per tape.
class Binder {
 public:
  Binder(Tape& tape, bool trainable) : tape_(&tape), trainable_(trainable) {}

  Var operator()(const Tensor& param);
  /// Variable previously bound to `param`; throws if it was never used.
  Var bound(const Tensor& param) const;
  bool contains(const Tensor& param) const { return vars_.contains(&param); }
  Tape& tape() { return *tape_; }

 private:
  Tape* tape_;
  bool trainable_;
  std::unordered_map<const Tensor*, Var> vars_;
};

Var apply(Binder& bind, Var x, const LinearParams& p);
Var apply(Binder& bind, Var x, const LayerNormParams& p);
Var apply(Binder& bind, Var x, const MlpParams& p);
/// Scaled dot-product self-attention over the rows of x [L, C], per head,
/// concatenated and output-projected.
Var mhsa(Binder& bind, Var x, const AttentionParams& p);

// Forward-only conveniences.
Tensor mhsa(const Tensor& x, const AttentionParams& p);
Tensor mlp(const Tensor& x, const MlpParams& p);
std::vector<double> softmax(std::span<const double> v);
std::vector<double> layer_norm(std::span<const double> v, std::span<const double> gain,
                               std::span<const double> shift, double eps);

}  // namespace paver::nn
