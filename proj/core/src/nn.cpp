#include "paver/nn.hpp"

#include <algorithm>
#include <cmath>

namespace paver::nn {

LinearParams LinearParams::init(std::size_t in, std::size_t out, Rng& rng, double stddev) {
  return {random_normal({out, in}, rng, stddev), Tensor({out})};
}

LinearParams LinearParams::zeros(std::size_t in, std::size_t out) {
  return {Tensor({out, in}), Tensor({out})};
}

void LinearParams::collect(const std::string& prefix, NamedParams& out) {
  out.emplace_back(prefix + ".weight", &weight);
  out.emplace_back(prefix + ".bias", &bias);
}

LayerNormParams LayerNormParams::identity(std::size_t width, double eps) {
  return {Tensor({width}, 1.0), Tensor({width}), eps};
}

void LayerNormParams::collect(const std::string& prefix, NamedParams& out) {
  out.emplace_back(prefix + ".weight", &gain);
  out.emplace_back(prefix + ".bias", &shift);
}

AttentionParams AttentionParams::init(std::size_t width, int n_heads, Rng& rng, double stddev) {
  if (n_heads <= 0 || width % static_cast<std::size_t>(n_heads) != 0) {
    throw ConfigError("attention width " + std::to_string(width) + " is not divisible by " +
                      std::to_string(n_heads) + " heads");
  }
  AttentionParams p;
  p.q = LinearParams::init(width, width, rng, stddev);
  p.k = LinearParams::init(width, width, rng, stddev);
  p.v = LinearParams::init(width, width, rng, stddev);
  p.o = LinearParams::init(width, width, rng, stddev);
  p.n_heads = n_heads;
  return p;
}

void AttentionParams::collect(const std::string& prefix, NamedParams& out) {
  q.collect(prefix + ".q", out);
  k.collect(prefix + ".k", out);
  v.collect(prefix + ".v", out);
  o.collect(prefix + ".o", out);
}

MlpParams MlpParams::init(std::size_t width, std::size_t hidden, Rng& rng, double stddev) {
  return {LinearParams::init(width, hidden, rng, stddev), LinearParams::init(hidden, width, rng, stddev)};
}

void MlpParams::collect(const std::string& prefix, NamedParams& out) {
  fc1.collect(prefix + ".fc1", out);
  fc2.collect(prefix + ".fc2", out);
}

Var Binder::operator()(const Tensor& param) {
  if (auto it = vars_.find(&param); it != vars_.end()) return it->second;
  Var v = trainable_ ? tape_->leaf(param) : tape_->borrow(param);
  vars_.emplace(&param, v);
  return v;
}

Var Binder::bound(const Tensor& param) const {
  auto it = vars_.find(&param);
  if (it == vars_.end()) throw ConfigError("parameter was not bound to the tape");
  return it->second;
}

Var apply(Binder& bind, Var x, const LinearParams& p) {
  return linear(x, bind(p.weight), bind(p.bias));
}

Var apply(Binder& bind, Var x, const LayerNormParams& p) {
  return layer_norm_rows(x, bind(p.gain), bind(p.shift), p.eps);
}

Var apply(Binder& bind, Var x, const MlpParams& p) {
  return apply(bind, gelu(apply(bind, x, p.fc1)), p.fc2);
}

Var mhsa(Binder& bind, Var x, const AttentionParams& p) {
  const std::size_t width = p.width();
  if (x.value().rank() != 2 || x.value().cols() != width) {
    throw ConfigError("mhsa: input " + dims_to_string(x.dims()) + " does not match width " +
                      std::to_string(width));
  }
  if (p.n_heads <= 0 || width % static_cast<std::size_t>(p.n_heads) != 0) {
    throw ConfigError("mhsa: width not divisible by head count");
  }
  const std::size_t head_dim = width / static_cast<std::size_t>(p.n_heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

  const Var q = apply(bind, x, p.q);
  const Var k = apply(bind, x, p.k);
  const Var v = apply(bind, x, p.v);
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(p.n_heads));
  for (std::size_t h = 0; h < static_cast<std::size_t>(p.n_heads); ++h) {
    const std::size_t b = h * head_dim, e = b + head_dim;
    const Var scores = scale(matmul_nt(slice_cols(q, b, e), slice_cols(k, b, e)), inv_sqrt);
    heads.push_back(matmul(softmax_rows(scores), slice_cols(v, b, e)));
  }
  const Var merged = heads.size() == 1 ? heads.front() : concat_cols(heads);
  return apply(bind, merged, p.o);
}

Tensor mhsa(const Tensor& x, const AttentionParams& p) {
  Tape tape;
  Binder bind(tape, false);
  return mhsa(bind, tape.constant(x), p).value();
}

Tensor mlp(const Tensor& x, const MlpParams& p) {
  Tape tape;
  Binder bind(tape, false);
  return apply(bind, tape.constant(x), p).value();
}

std::vector<double> softmax(std::span<const double> v) {
  std::vector<double> out(v.size());
  if (v.empty()) return out;
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

std::vector<double> layer_norm(std::span<const double> v, std::span<const double> gain,
                               std::span<const double> shift, double eps) {
  if (gain.size() != v.size() || shift.size() != v.size()) {
    throw ConfigError("layer_norm: affine parameters must match the input length");
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  const double inv = 1.0 / std::sqrt(var + eps);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) * inv * gain[i] + shift[i];
  return out;
}

}  // namespace paver::nn
