#pragma once

// Reverse-mode differentiation over dense matrices.
//
// Every node holds an Eigen matrix. Columns are independent samples in all
// batched code, so one tape evaluates a whole dataset at once. Nodes that do
// not depend on a differentiable leaf carry no backward closure, which makes
// value-only evaluation cheap.
//
// A default-constructed Var is a structural zero. Only add/sub/mul/neg/scale
// accept it; everything else requires a live node.

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace dlda::ad {

using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  explicit operator bool() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

  const Mat& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  // Convenience for 1x1 nodes.
  double scalar() const;
  bool needs_grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backprop = std::function<void(Tape&, const Mat&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Mat value);
  // A differentiable input; its gradient is available after backward().
  Var leaf(Mat value);

  // Seeds d(root)/d(root) = 1 and propagates. root must be 1x1.
  void backward(Var root);

  // Gradient of the last backward() root with respect to v. Zero matrix of
  // the right shape when no path reached v.
  Mat grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

  // Op implementation surface.
  Var push(Mat value, std::span<const Var> parents, Backprop backprop);
  Var push(Mat value, std::initializer_list<Var> parents, Backprop backprop) {
    return push(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backprop));
  }
  // Installs a closure that needs the node's own output; no-op for nodes
  // that do not require a gradient.
  void attach(Var out, Backprop backprop);
  void accumulate(Var target, const Mat& g);
  const Mat& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    bool has_grad = false;
    Backprop backprop;
  };
  std::deque<Node> nodes_;
};

// -- elementwise -----------------------------------------------------------
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var neg(Var a);
Var mul(Var a, Var b);  // Hadamard product
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var mul_const(Var a, const Mat& c);  // Hadamard product with a constant
Var square(Var a);
Var sqrt(Var a);
Var log(Var a);
Var abs(Var a);
Var sin(Var a);
Var cos(Var a);
// order-th derivative of x * Phi(x), order in [0, 2].
Var gelu(Var a, int order = 0);

// -- linear algebra / reshaping ---------------------------------------------
Var matmul(Var a, Var b);
Var add_bias(Var x, Var bias);       // bias (n x 1) added to every column
Var broadcast_cols(Var a, Index cols);  // (n x 1) -> (n x cols)
Var row(Var a, Index i);
Var vcat(std::span<const Var> parts);
Var gather_cols(Var a, std::span<const Index> cols);
Var col_sum(Var a);  // (n x B) -> (1 x B)
Var sum(Var a);      // -> 1x1

// -- batched small-matrix ops ------------------------------------------------
// s is (d*d x B); column b holds a d x d matrix in column-major order.
Var logabsdet(Var s, int d);
// Solves S_b x_b = r_b for every column b. r is (d x B). Singular systems
// produce NaN columns.
Var solve(Var s, Var r, int d);

}  // namespace dlda::ad
