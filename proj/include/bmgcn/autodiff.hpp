#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bmgcn/graph.hpp"
#include "bmgcn/matrix.hpp"

namespace bmgcn {

// Fixed compressed-row support for edge-restricted operations. Values living
// on a pattern are carried as an nnz x 1 tensor in row order.
struct SparsePattern {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::int64_t> offsets{0};
  std::vector<NodeId> columns;

  std::int64_t nnz() const { return offsets.back(); }

  // Support of the adjacency matrix. With `diagonal`, entry (i, i) is added to
  // the rows flagged in it (columns kept sorted).
  static SparsePattern from_graph(const Graph& g, const Mask& diagonal = {});

  // Dense n x n matrix holding `values` on the support and `fill` elsewhere.
  Matrix to_dense(const Matrix& values, double fill = 0.0) const;
};

using PatternPtr = std::shared_ptr<const SparsePattern>;

class Tape;

// Handle to a tensor recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  std::int64_t rows() const;
  std::int64_t cols() const;
  const Matrix& value() const;
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records primitive operations in execution order (which is a topological
// order) and replays their backward rules in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf tensors. Non-finite values are rejected with NumericalError.
  Var constant(Matrix value);
  Var variable(Matrix value);

  // Gradients of a 1x1 loss with respect to every requires_grad tensor.
  // Throws std::invalid_argument for non-scalar losses and NumericalError
  // (naming the producing op) when a gradient turns non-finite.
  void backward(Var loss);

  // Zero matrix of the right shape if the tensor is not on a path to the loss.
  Matrix grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  const std::string& op_name(Var v) const { return nodes_[v.id_].op; }

  // Used by op implementations.
  Var record(Matrix value, std::string op, std::vector<Var> inputs, BackwardFn backward);
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad_ref(std::size_t id) const { return nodes_[id].grad; }
  bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Grad accumulator of an input, allocated on first use.
  Matrix& accumulate(std::size_t id);

 private:
  friend class Var;
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::string op;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Dense primitives.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var add_row(Var a, Var row);  // adds a 1 x cols bias to every row
Var scale(Var a, double s);
Var hadamard(Var a, Var b);
Var relu(Var a);
// Inverted dropout: kept entries scaled by 1/(1-rate); identity when !train.
Var dropout(Var a, double rate, bool train, std::uint64_t seed);
Var row_softmax(Var a);
Var sum(Var a);
// Multiplies the diagonal of a square matrix by `factor`.
Var scale_diagonal(Var a, double factor);
// a / b elementwise with b clamped below at eps; no gradient flows through a
// clamped denominator entry.
Var divide_guarded(Var a, Var b, double eps);
// Same value, no gradient.
Var detach(Var a);
// Mean over masked rows of cross-entropy between softmax(logits) and `targets`.
Var softmax_cross_entropy_masked(Var logits, const Matrix& targets, const Mask& mask);

// Sparse primitives over a fixed pattern. `values` is nnz x 1.
Var spmm(const PatternPtr& pattern, Var values, Var dense);
Var masked_row_softmax(const PatternPtr& pattern, Var values);
// value at stored (i, j) = B_i Q B_j^T.
Var edgewise_bilinear(const PatternPtr& pattern, Var soft_labels, Var similarity);

}  // namespace bmgcn
