#pragma once

// Tape-based reverse-mode differentiation over 2-D tensors.
//
// Every op evaluates eagerly and appends a node to its tape. Nodes that do not
// depend on a gradient-requiring leaf carry no backward closure, so constants
// (frozen encoder outputs, fixed mixing weights) never receive gradients.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "paver/tensor.hpp"

namespace paver::nn {

class Tape;

/// Handle to a tape node. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  /// Gradient accumulated by the last Tape::backward; empty if none flowed here.
  const Tensor& grad() const;
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  const Dims& dims() const { return value().dims(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);
  Var constant(Tensor value);
  /// Constant that references caller-owned storage; it must outlive the tape.
  Var borrow(const Tensor& value);

  /// Appends an op result. `backward` is dropped unless some parent requires grad.
  Var record(Tensor value, std::span<const Var> parents, BackwardFn backward);

  /// Seeds d(root)/d(root) = 1 for a single-element root and propagates.
  void backward(Var root);

  const Tensor& value(std::size_t id) const {
    const Node& node = nodes_.at(id);
    return node.borrowed ? *node.borrowed : node.value;
  }
  const Tensor& grad(std::size_t id) const { return nodes_.at(id).grad; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  /// Gradient buffer of a node, allocated on first use; nullptr for constants.
  Tensor* grad_buffer(Var v);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    const Tensor* borrowed = nullptr;
  };
  std::vector<Node> nodes_;
};

// Ops. Matrices are rank-2 [rows, cols]; vectors are rank-1.

/// A[m,k] * B[k,n]
Var matmul(Var a, Var b);
/// A[m,k] * B[n,k]^T
Var matmul_nt(Var a, Var b);
/// X[m,in] * W[out,in]^T + b[out]
Var linear(Var x, Var weight, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
/// Adds a vector to every row.
Var add_row(Var a, Var row);
Var gelu(Var a);
Var softmax_rows(Var a);
Var layer_norm_rows(Var a, Var gain, Var shift, double eps);

Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var concat_rows(std::span<const Var> parts);
/// out.row(r) = a.row(index[r])
Var gather_rows(Var a, std::span<const std::size_t> index);

/// Sparse linear combination of rows: out.row(r) = sum_k weight * a.row(src).
struct RowMix {
  struct Term {
    std::size_t src;
    double weight;
  };
  std::vector<std::vector<Term>> rows;
};
Var mix_rows(Var a, const RowMix& mix);

/// Sum of squared entries as a [1] tensor.
Var sum_squares(Var a);

// Scalar helpers shared with the forward-only code paths.
double gelu(double x);
double gelu_grad(double x);

}  // namespace paver::nn
