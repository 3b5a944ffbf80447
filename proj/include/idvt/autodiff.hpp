#pragma once

// Minimal tape-based reverse-mode differentiation over dense matrices.
//
// A Tape records every operation of one forward pass. Calling backward() on a
// scalar result walks the tape in reverse, accumulates gradients, flushes the
// gradients of parameter leaves into their Parameter::grad, and clears the
// tape. Vars are lightweight handles and become invalid once the tape clears.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "idvt/matrix.hpp"
#include "idvt/sparse.hpp"

namespace idvt {

// A trainable tensor with its gradient accumulator and Adam moments.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix first_moment;
  Matrix second_moment;

  Parameter() = default;
  Parameter(std::string n, Matrix v);
  void zero_grad() { grad.fill(0.0); }
};

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
  // Scalar value of a 1x1 Var.
  double item() const;
  bool requires_grad() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Constant input: never receives a gradient.
  Var constant(Matrix value);
  // Differentiable leaf bound to a parameter. The parameter must outlive
  // the next backward() call.
  Var param(Parameter& p);

  // Appends a node. `inputs` decide whether the node requires a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);

  // loss must be 1x1; throws ContractError otherwise. Clears the tape.
  void backward(Var loss);
  void clear();

  std::size_t size() const noexcept { return nodes_.size(); }
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  // Gradient accumulator of a node; only valid during backward().
  Matrix& grad_mut(std::size_t id) { return nodes_[id].grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
    Parameter* sink = nullptr;
  };
  std::vector<Node> nodes_;
};

namespace ad {

// Dense algebra.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);

// Elementwise nonlinearities.
Var sigmoid(Var a);
Var exp(Var a);
// Throws DomainError on any non-positive entry.
Var log(Var a);
Var log_sigmoid(Var a);
Var leaky_relu(Var a, double negative_slope);

// Rows divided by max(||row||, eps).
Var row_l2_normalize(Var a, double eps = 1e-12);

// Sparse products. The sparse operand is held by reference and must outlive
// the tape's backward pass.
Var spmm(const SparseMatrix& s, Var x);
// out[r] = sum_k w[k] * x[col(k)] over the nonzeros k of row r. w is nnz x 1.
Var weighted_spmm(const SparseBinaryMatrix& pattern, Var w, Var x);
// Softmax over each row's segment of a nnz x 1 logit column.
Var segment_softmax(Var logits, std::span<const std::size_t> segment_offsets);

// Indexing.
Var gather_rows(Var a, std::span<const Index> rows);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var diag(Var square);

// Reductions.
Var sum(Var a);
Var mean(Var a);
Var row_sum(Var a);
Var row_logsumexp(Var a);

}  // namespace ad

}  // namespace idvt
