#include "paver/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace paver::nn {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ConfigError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                      dims_to_string(t.dims()));
  }
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dims() != b.dims()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + dims_to_string(a.dims()) + " vs " +
                      dims_to_string(b.dims()));
  }
}

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[m,k] * B[n,k]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c[i * n + j] += s;
    }
  }
}

// C[m,n] += A[k,m]^T * B[k,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t k, std::size_t m,
             std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a[p * m + i];
      if (av == 0.0) continue;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::borrow(const Tensor& value) {
  nodes_.push_back(Node{Tensor(), {}, false, {}, &value});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw ConfigError("autodiff: mixing variables from different tapes");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : BackwardFn{}});
  return Var(this, nodes_.size() - 1);
}

Tensor* Tape::grad_buffer(Var v) {
  Node& node = nodes_.at(v.id());
  if (!node.requires_grad) return nullptr;
  if (node.grad.empty() && !node.value.empty()) node.grad = Tensor::zeros_like(node.value);
  return &node.grad;
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw ConfigError("autodiff: root belongs to another tape");
  if (value(root.id()).size() != 1) throw ConfigError("autodiff: backward needs a scalar root");
  for (Node& node : nodes_) node.grad = Tensor();
  Tensor* seed = grad_buffer(root);
  if (seed == nullptr) return;
  (*seed)[0] = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.backward && !node.grad.empty()) {
      // The closure only touches parent gradients, which live in other nodes.
      node.backward(*this, node.grad);
    }
  }
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank(av, 2, "matmul");
  require_rank(bv, 2, "matmul");
  if (av.cols() != bv.rows()) throw ConfigError("matmul: inner dimensions differ");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out({m, n});
  gemm_nn(av.data(), bv.data(), out.data(), m, k, n);
  const Var parents[] = {a, b};
  return a.tape()->record(std::move(out), parents, [a, b, m, k, n](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(a)) gemm_nt(g.data(), b.value().data(), ga->data(), m, n, k);
    if (Tensor* gb = t.grad_buffer(b)) gemm_tn(a.value().data(), g.data(), gb->data(), m, k, n);
  });
}

Var matmul_nt(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank(av, 2, "matmul_nt");
  require_rank(bv, 2, "matmul_nt");
  if (av.cols() != bv.cols()) throw ConfigError("matmul_nt: inner dimensions differ");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
  Tensor out({m, n});
  gemm_nt(av.data(), bv.data(), out.data(), m, k, n);
  const Var parents[] = {a, b};
  return a.tape()->record(std::move(out), parents, [a, b, m, k, n](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(a)) gemm_nn(g.data(), b.value().data(), ga->data(), m, n, k);
    if (Tensor* gb = t.grad_buffer(b)) gemm_tn(g.data(), a.value().data(), gb->data(), m, n, k);
  });
}

Var linear(Var x, Var weight, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  require_rank(xv, 2, "linear");
  require_rank(wv, 2, "linear");
  require_rank(bv, 1, "linear");
  if (xv.cols() != wv.cols() || bv.size() != wv.rows()) {
    throw ConfigError("linear: input " + dims_to_string(xv.dims()) + " incompatible with weight " +
                      dims_to_string(wv.dims()) + " and bias " + dims_to_string(bv.dims()));
  }
  const std::size_t m = xv.rows(), in = wv.cols(), out_dim = wv.rows();
  Tensor out({m, out_dim});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < out_dim; ++j) out(i, j) = bv[j];
  }
  gemm_nt(xv.data(), wv.data(), out.data(), m, in, out_dim);
  const Var parents[] = {x, weight, bias};
  return x.tape()->record(
      std::move(out), parents, [x, weight, bias, m, in, out_dim](Tape& t, const Tensor& g) {
        if (Tensor* gx = t.grad_buffer(x)) {
          gemm_nn(g.data(), weight.value().data(), gx->data(), m, out_dim, in);
        }
        if (Tensor* gw = t.grad_buffer(weight)) {
          gemm_tn(g.data(), x.value().data(), gw->data(), m, out_dim, in);
        }
        if (Tensor* gb = t.grad_buffer(bias)) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < out_dim; ++j) (*gb)[j] += g(i, j);
          }
        }
      });
}

Var add(Var a, Var b) {
  require_same(a.value(), b.value(), "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const Var parents[] = {a, b};
  return a.tape()->record(std::move(out), parents, [a, b](Tape& t, const Tensor& g) {
    for (Var p : {a, b}) {
      if (Tensor* gp = t.grad_buffer(p)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gp)[i] += g[i];
      }
    }
  });
}

Var sub(Var a, Var b) {
  require_same(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const Var parents[] = {a, b};
  return a.tape()->record(std::move(out), parents, [a, b](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (Tensor* gb = t.grad_buffer(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (double& x : out.values()) x *= s;
  const Var parents[] = {a};
  return a.tape()->record(std::move(out), parents, [a, s](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += s * g[i];
    }
  });
}

Var add_row(Var a, Var row) {
  const Tensor& av = a.value();
  require_rank(av, 2, "add_row");
  if (row.value().size() != av.cols()) throw ConfigError("add_row: row length mismatch");
  Tensor out = av;
  const std::size_t m = av.rows(), n = av.cols();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out(i, j) += row.value()[j];
  }
  const Var parents[] = {a, row};
  return a.tape()->record(std::move(out), parents, [a, row, m, n](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (Tensor* gr = t.grad_buffer(row)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) (*gr)[j] += g(i, j);
      }
    }
  });
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
  return cdf + x * pdf;
}

Var gelu(Var a) {
  Tensor out = a.value();
  for (double& x : out.values()) x = gelu(x);
  const Var parents[] = {a};
  return a.tape()->record(std::move(out), parents, [a](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(a)) {
      const Tensor& x = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * gelu_grad(x[i]);
    }
  });
}

Var softmax_rows(Var a) {
  const Tensor& av = a.value();
  require_rank(av, 2, "softmax_rows");
  const std::size_t m = av.rows(), n = av.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double mx = av(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, av(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out(i, j) = std::exp(av(i, j) - mx);
      sum += out(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) out(i, j) /= sum;
  }
  Tensor y = out;
  const Var parents[] = {a};
  return a.tape()->record(std::move(out), parents, [a, y = std::move(y), m, n](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(a)) {
      for (std::size_t i = 0; i < m; ++i) {
        double dotp = 0.0;
        for (std::size_t j = 0; j < n; ++j) dotp += g(i, j) * y(i, j);
        for (std::size_t j = 0; j < n; ++j) (*ga)(i, j) += y(i, j) * (g(i, j) - dotp);
      }
    }
  });
}

Var layer_norm_rows(Var a, Var gain, Var shift, double eps) {
  const Tensor& av = a.value();
  require_rank(av, 2, "layer_norm_rows");
  const std::size_t m = av.rows(), n = av.cols();
  if (gain.value().size() != n || shift.value().size() != n) {
    throw ConfigError("layer_norm_rows: affine parameters must have length " + std::to_string(n));
  }
  Tensor normed({m, n});
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += av(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (av(i, j) - mean) * (av(i, j) - mean);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) normed(i, j) = (av(i, j) - mean) * inv_std[i];
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out(i, j) = normed(i, j) * gain.value()[j] + shift.value()[j];
    }
  }
  const Var parents[] = {a, gain, shift};
  return a.tape()->record(
      std::move(out), parents,
      [a, gain, shift, normed, inv_std, m, n](Tape& t, const Tensor& g) {
        if (Tensor* ga = t.grad_buffer(a)) {
          std::vector<double> dxhat(n);
          for (std::size_t i = 0; i < m; ++i) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              dxhat[j] = g(i, j) * gain.value()[j];
              mean_d += dxhat[j];
              mean_dx += dxhat[j] * normed(i, j);
            }
            mean_d /= static_cast<double>(n);
            mean_dx /= static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
              (*ga)(i, j) += inv_std[i] * (dxhat[j] - mean_d - normed(i, j) * mean_dx);
            }
          }
        }
        if (Tensor* gg = t.grad_buffer(gain)) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) (*gg)[j] += g(i, j) * normed(i, j);
          }
        }
        if (Tensor* gs = t.grad_buffer(shift)) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) (*gs)[j] += g(i, j);
          }
        }
      });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  require_rank(av, 2, "slice_cols");
  if (begin > end || end > av.cols()) throw ConfigError("slice_cols: range out of bounds");
  const std::size_t m = av.rows(), w = end - begin;
  Tensor out({m, w});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < w; ++j) out(i, j) = av(i, begin + j);
  }
  const Var parents[] = {a};
  return a.tape()->record(std::move(out), parents, [a, begin, m, w](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(a)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < w; ++j) (*ga)(i, begin + j) += g(i, j);
      }
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ConfigError("concat_cols: no inputs");
  const std::size_t m = parts[0].value().rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_rank(p.value(), 2, "concat_cols");
    if (p.value().rows() != m) throw ConfigError("concat_cols: row counts differ");
    total += p.value().cols();
  }
  Tensor out({m, total});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < pv.cols(); ++j) out(i, offset + j) = pv(i, j);
    }
    offset += pv.cols();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return parts[0].tape()->record(std::move(out), parts, [keep, m](Tape& t, const Tensor& g) {
    std::size_t off = 0;
    for (const Var& p : keep) {
      const std::size_t w = p.value().cols();
      if (Tensor* gp = t.grad_buffer(p)) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < w; ++j) (*gp)(i, j) += g(i, off + j);
        }
      }
      off += w;
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  require_rank(av, 2, "slice_rows");
  if (begin > end || end > av.rows()) throw ConfigError("slice_rows: range out of bounds");
  const std::size_t n = av.cols();
  Tensor out({end - begin, n},
             std::vector<double>(av.data() + begin * n, av.data() + end * n));
  const Var parents[] = {a};
  return a.tape()->record(std::move(out), parents, [a, begin, n](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[begin * n + i] += g[i];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ConfigError("concat_rows: no inputs");
  const std::size_t n = parts[0].value().cols();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_rank(p.value(), 2, "concat_rows");
    if (p.value().cols() != n) throw ConfigError("concat_rows: column counts differ");
    total += p.value().rows();
  }
  std::vector<double> data;
  data.reserve(total * n);
  for (const Var& p : parts) data.insert(data.end(), p.value().data(), p.value().data() + p.value().size());
  std::vector<Var> keep(parts.begin(), parts.end());
  return parts[0].tape()->record(Tensor({total, n}, std::move(data)), parts,
                                 [keep](Tape& t, const Tensor& g) {
                                   std::size_t off = 0;
                                   for (const Var& p : keep) {
                                     const std::size_t len = p.value().size();
                                     if (Tensor* gp = t.grad_buffer(p)) {
                                       for (std::size_t i = 0; i < len; ++i) (*gp)[i] += g[off + i];
                                     }
                                     off += len;
                                   }
                                 });
}

Var gather_rows(Var a, std::span<const std::size_t> index) {
  const Tensor& av = a.value();
  require_rank(av, 2, "gather_rows");
  const std::size_t n = av.cols();
  Tensor out({index.size(), n});
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= av.rows()) throw ConfigError("gather_rows: index out of range");
    for (std::size_t j = 0; j < n; ++j) out(r, j) = av(index[r], j);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  const Var parents[] = {a};
  return a.tape()->record(std::move(out), parents, [a, idx, n](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(a)) {
      for (std::size_t r = 0; r < idx.size(); ++r) {
        for (std::size_t j = 0; j < n; ++j) (*ga)(idx[r], j) += g(r, j);
      }
    }
  });
}

Var mix_rows(Var a, const RowMix& mix) {
  const Tensor& av = a.value();
  require_rank(av, 2, "mix_rows");
  const std::size_t n = av.cols();
  Tensor out({mix.rows.size(), n});
  for (std::size_t r = 0; r < mix.rows.size(); ++r) {
    for (const RowMix::Term& term : mix.rows[r]) {
      if (term.src >= av.rows()) throw ConfigError("mix_rows: source row out of range");
      for (std::size_t j = 0; j < n; ++j) out(r, j) += term.weight * av(term.src, j);
    }
  }
  const Var parents[] = {a};
  return a.tape()->record(std::move(out), parents, [a, mix, n](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(a)) {
      for (std::size_t r = 0; r < mix.rows.size(); ++r) {
        for (const RowMix::Term& term : mix.rows[r]) {
          for (std::size_t j = 0; j < n; ++j) (*ga)(term.src, j) += term.weight * g(r, j);
        }
      }
    }
  });
}

Var sum_squares(Var a) {
  double s = 0.0;
  for (double x : a.value().values()) s += x * x;
  const Var parents[] = {a};
  return a.tape()->record(Tensor({1}, {s}), parents, [a](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(a)) {
      const Tensor& x = a.value();
      for (std::size_t i = 0; i < x.size(); ++i) (*ga)[i] += 2.0 * g[0] * x[i];
    }
  });
}

}  // namespace paver::nn
