#include "dlda/tape.hpp"

#include "dlda/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dlda::ad {

const Mat& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Mat& v = value();
  if (v.size() != 1) throw DimensionError("scalar() on a non-1x1 node");
  return v(0, 0);
}

bool Var::needs_grad() const { return tape_ != nullptr && tape_->needs_grad(id_); }

Var Tape::constant(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), false, false, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::leaf(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), true, false, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::push(Mat value, std::span<const Var> parents, Backprop backprop) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p && p.tape() != this) throw DimensionError("operands live on different tapes");
    needs = needs || p.needs_grad();
  }
  nodes_.push_back(Node{std::move(value), Mat(), needs, false, needs ? std::move(backprop) : nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::attach(Var out, Backprop backprop) {
  Node& n = nodes_[static_cast<std::size_t>(out.id())];
  if (n.needs_grad) n.backprop = std::move(backprop);
}

void Tape::accumulate(Var target, const Mat& g) {
  if (!target) return;
  Node& n = nodes_[static_cast<std::size_t>(target.id())];
  if (!n.needs_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root) {
  if (!root || root.tape() != this) throw DimensionError("backward: root not on this tape");
  if (root.value().size() != 1) throw DimensionError("backward: objective is not scalar");
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(root, Mat::Ones(1, 1));
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.has_grad && n.backprop) n.backprop(*this, n.grad);
  }
}

Mat Tape::grad(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id())];
  if (n.has_grad) return n.grad;
  return Mat::Zero(n.value.rows(), n.value.cols());
}

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
  }
}

void require(const Var& a, const char* op) {
  if (!a) throw DimensionError(std::string(op) + ": structural zero operand");
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// k-th derivative of gelu(x) = x * Phi(x).
double gelu_derivative(double x, int k) {
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  switch (k) {
    case 0:
      return 0.5 * x * std::erfc(-x * kInvSqrt2);
    case 1:
      return 0.5 * std::erfc(-x * kInvSqrt2) + x * pdf;
    case 2:
      return pdf * (2.0 - x * x);
    case 3:
      return pdf * (x * x * x - 4.0 * x);
    default:
      throw DimensionError("gelu derivative order out of range");
  }
}

}  // namespace

Var add(Var a, Var b) {
  if (!a) return b;
  if (!b) return a;
  check_same_shape(a, b, "add");
  Tape& t = *a.tape();
  return t.push(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Mat& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  if (!b) return a;
  if (!a) return neg(b);
  check_same_shape(a, b, "sub");
  Tape& t = *a.tape();
  return t.push(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Mat& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var neg(Var a) {
  if (!a) return a;
  Tape& t = *a.tape();
  return t.push(-a.value(), {a}, [a](Tape& t, const Mat& g) { t.accumulate(a, -g); });
}

Var mul(Var a, Var b) {
  if (!a || !b) return Var();
  check_same_shape(a, b, "mul");
  Tape& t = *a.tape();
  return t.push(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Mat& g) {
    if (a.needs_grad()) t.accumulate(a, g.cwiseProduct(b.value()));
    if (b.needs_grad()) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var scale(Var a, double s) {
  if (!a) return a;
  Tape& t = *a.tape();
  return t.push(a.value() * s, {a}, [a, s](Tape& t, const Mat& g) { t.accumulate(a, g * s); });
}

Var add_scalar(Var a, double s) {
  require(a, "add_scalar");
  Tape& t = *a.tape();
  return t.push(a.value().array() + s, {a}, [a](Tape& t, const Mat& g) { t.accumulate(a, g); });
}

Var mul_const(Var a, const Mat& c) {
  if (!a) return a;
  if (a.rows() != c.rows() || a.cols() != c.cols()) throw DimensionError("mul_const: shape mismatch");
  Tape& t = *a.tape();
  return t.push(a.value().cwiseProduct(c), {a}, [a, c](Tape& t, const Mat& g) { t.accumulate(a, g.cwiseProduct(c)); });
}

Var square(Var a) {
  require(a, "square");
  Tape& t = *a.tape();
  return t.push(a.value().array().square().matrix(), {a},
                [a](Tape& t, const Mat& g) { t.accumulate(a, 2.0 * g.cwiseProduct(a.value())); });
}

Var sqrt(Var a) {
  require(a, "sqrt");
  Tape& t = *a.tape();
  Var out = t.push(a.value().array().sqrt().matrix(), {a}, nullptr);
  t.attach(out, [a, out](Tape& t, const Mat& g) { t.accumulate(a, 0.5 * g.cwiseQuotient(out.value())); });
  return out;
}

Var log(Var a) {
  require(a, "log");
  Tape& t = *a.tape();
  return t.push(a.value().array().log().matrix(), {a},
                [a](Tape& t, const Mat& g) { t.accumulate(a, g.cwiseQuotient(a.value())); });
}

Var abs(Var a) {
  require(a, "abs");
  Tape& t = *a.tape();
  return t.push(a.value().cwiseAbs(), {a}, [a](Tape& t, const Mat& g) {
    t.accumulate(a, g.cwiseProduct(a.value().unaryExpr([](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); })));
  });
}

Var sin(Var a) {
  require(a, "sin");
  Tape& t = *a.tape();
  return t.push(a.value().array().sin().matrix(), {a},
                [a](Tape& t, const Mat& g) { t.accumulate(a, g.cwiseProduct(a.value().array().cos().matrix())); });
}

Var cos(Var a) {
  require(a, "cos");
  Tape& t = *a.tape();
  return t.push(a.value().array().cos().matrix(), {a},
                [a](Tape& t, const Mat& g) { t.accumulate(a, -g.cwiseProduct(a.value().array().sin().matrix())); });
}

Var gelu(Var a, int order) {
  require(a, "gelu");
  if (order < 0 || order > 2) throw DimensionError("gelu: order must be 0, 1 or 2");
  Tape& t = *a.tape();
  Mat v = a.value().unaryExpr([order](double x) { return gelu_derivative(x, order); });
  return t.push(std::move(v), {a}, [a, order](Tape& t, const Mat& g) {
    t.accumulate(a, g.cwiseProduct(a.value().unaryExpr([order](double x) { return gelu_derivative(x, order + 1); })));
  });
}

Var matmul(Var a, Var b) {
  require(a, "matmul");
  require(b, "matmul");
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
  Tape& t = *a.tape();
  Mat v = a.value() * b.value();
  return t.push(std::move(v), {a, b}, [a, b](Tape& t, const Mat& g) {
    if (a.needs_grad()) t.accumulate(a, g * b.value().transpose());
    if (b.needs_grad()) t.accumulate(b, a.value().transpose() * g);
  });
}

Var add_bias(Var x, Var bias) {
  require(x, "add_bias");
  require(bias, "add_bias");
  if (bias.cols() != 1 || bias.rows() != x.rows()) throw DimensionError("add_bias: bias must be (rows x 1)");
  Tape& t = *x.tape();
  Mat v = x.value().colwise() + bias.value().col(0);
  return t.push(std::move(v), {x, bias}, [x, bias](Tape& t, const Mat& g) {
    t.accumulate(x, g);
    if (bias.needs_grad()) t.accumulate(bias, g.rowwise().sum());
  });
}

Var broadcast_cols(Var a, Index cols) {
  require(a, "broadcast_cols");
  if (a.cols() != 1) throw DimensionError("broadcast_cols: input must be a column");
  Tape& t = *a.tape();
  Mat v = a.value().replicate(1, cols);
  return t.push(std::move(v), {a}, [a](Tape& t, const Mat& g) { t.accumulate(a, g.rowwise().sum()); });
}

Var row(Var a, Index i) {
  require(a, "row");
  if (i < 0 || i >= a.rows()) throw DimensionError("row: index out of range");
  Tape& t = *a.tape();
  return t.push(a.value().row(i), {a}, [a, i](Tape& t, const Mat& g) {
    Mat full = Mat::Zero(a.rows(), a.cols());
    full.row(i) = g;
    t.accumulate(a, full);
  });
}

Var vcat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("vcat: no parts");
  Index rows = 0;
  const Index cols = parts.front().cols();
  for (const Var& p : parts) {
    require(p, "vcat");
    if (p.cols() != cols) throw DimensionError("vcat: column counts differ");
    rows += p.rows();
  }
  Tape& t = *parts.front().tape();
  Mat v(rows, cols);
  Index r = 0;
  for (const Var& p : parts) {
    v.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return t.push(std::move(v), parts, [ps](Tape& t, const Mat& g) {
    Index r = 0;
    for (const Var& p : ps) {
      if (p.needs_grad()) t.accumulate(p, g.middleRows(r, p.rows()));
      r += p.rows();
    }
  });
}

Var gather_cols(Var a, std::span<const Index> cols) {
  require(a, "gather_cols");
  Tape& t = *a.tape();
  Mat v(a.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 0 || cols[j] >= a.cols()) throw DimensionError("gather_cols: index out of range");
    v.col(static_cast<Index>(j)) = a.value().col(cols[j]);
  }
  std::vector<Index> idx(cols.begin(), cols.end());
  return t.push(std::move(v), {a}, [a, idx = std::move(idx)](Tape& t, const Mat& g) {
    Mat full = Mat::Zero(a.rows(), a.cols());
    for (std::size_t j = 0; j < idx.size(); ++j) full.col(idx[j]) += g.col(static_cast<Index>(j));
    t.accumulate(a, full);
  });
}

Var col_sum(Var a) {
  require(a, "col_sum");
  Tape& t = *a.tape();
  return t.push(a.value().colwise().sum(), {a},
                [a](Tape& t, const Mat& g) { t.accumulate(a, g.replicate(a.rows(), 1)); });
}

Var sum(Var a) {
  require(a, "sum");
  Tape& t = *a.tape();
  Mat v(1, 1);
  v(0, 0) = a.value().sum();
  return t.push(std::move(v), {a},
                [a](Tape& t, const Mat& g) { t.accumulate(a, Mat::Constant(a.rows(), a.cols(), g(0, 0))); });
}

namespace {

Eigen::MatrixXd column_as_square(const Mat& s, Index col, int d) {
  return Eigen::Map<const Eigen::MatrixXd>(s.col(col).data(), d, d);
}

}  // namespace

Var logabsdet(Var s, int d) {
  require(s, "logabsdet");
  if (s.rows() != static_cast<Index>(d) * d) throw DimensionError("logabsdet: expected d*d rows");
  Tape& t = *s.tape();
  const Index batch = s.cols();
  Mat v(1, batch);
  for (Index b = 0; b < batch; ++b) {
    const Eigen::MatrixXd m = column_as_square(s.value(), b, d);
    v(0, b) = std::log(std::abs(m.partialPivLu().determinant()));
  }
  return t.push(std::move(v), {s}, [s, d](Tape& t, const Mat& g) {
    const Index batch = s.cols();
    Mat gs(s.rows(), batch);
    for (Index b = 0; b < batch; ++b) {
      const Eigen::MatrixXd m = column_as_square(s.value(), b, d);
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
      Eigen::MatrixXd inv_t;
      if (lu.determinant() == 0.0) {
        inv_t = Eigen::MatrixXd::Constant(d, d, std::numeric_limits<double>::quiet_NaN());
      } else {
        inv_t = lu.inverse().transpose();
      }
      gs.col(b) = Eigen::Map<const Eigen::VectorXd>(inv_t.data(), static_cast<Index>(d) * d) * g(0, b);
    }
    t.accumulate(s, gs);
  });
}

Var solve(Var s, Var r, int d) {
  require(s, "solve");
  require(r, "solve");
  if (s.rows() != static_cast<Index>(d) * d || r.rows() != d || s.cols() != r.cols()) {
    throw DimensionError("solve: shape mismatch");
  }
  Tape& t = *s.tape();
  const Index batch = s.cols();
  Mat x(d, batch);
  for (Index b = 0; b < batch; ++b) {
    const Eigen::MatrixXd m = column_as_square(s.value(), b, d);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    if (lu.determinant() == 0.0 || !std::isfinite(lu.determinant())) {
      x.col(b).setConstant(std::numeric_limits<double>::quiet_NaN());
    } else {
      x.col(b) = lu.solve(r.value().col(b));
    }
  }
  Var o = t.push(std::move(x), {s, r}, nullptr);
  t.attach(o, [s, r, o, d](Tape& t, const Mat& g) {
    const Index batch = s.cols();
    Mat gr(d, batch);
    Mat gs(s.rows(), batch);
    for (Index b = 0; b < batch; ++b) {
      const Eigen::MatrixXd m = column_as_square(s.value(), b, d);
      const Eigen::VectorXd rb = m.transpose().partialPivLu().solve(g.col(b));
      gr.col(b) = rb;
      const Eigen::MatrixXd gm = -rb * o.value().col(b).transpose();
      gs.col(b) = Eigen::Map<const Eigen::VectorXd>(gm.data(), static_cast<Index>(d) * d);
    }
    t.accumulate(r, gr);
    t.accumulate(s, gs);
  });
  return o;
}

}  // namespace dlda::ad
