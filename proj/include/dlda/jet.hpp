#pragma once

// Truncated Taylor expansions ("jets") carried through tape operations.
//
// A Jet holds a value block and its first- and optionally second-order
// directional derivatives with respect to a fixed set of input directions.
// All parts have the same shape (rows x batch) and are ordinary tape nodes,
// so reverse mode can differentiate through any derivative a Jet exposes:
// this is what gives parameter gradients of objectives built from input
// gradients and input Hessians.
//
// A null part is an exact zero and is skipped in arithmetic.

#include "dlda/tape.hpp"

#include <span>
#include <vector>

namespace dlda::ad {

class Jet {
 public:
  Jet() = default;
  // A jet with the given value and zero derivatives.
  Jet(Var value, int dirs, int order);

  // Value v whose derivative along direction `dir` is one in every entry.
  static Jet seed(Var value, int dir, int dirs, int order);

  int dirs() const { return static_cast<int>(d1_.size()); }
  int order() const { return order_; }
  Index rows() const { return value_.rows(); }
  Index cols() const { return value_.cols(); }

  const Var& value() const { return value_; }
  Var& value() { return value_; }
  const Var& d1(int i) const { return d1_[static_cast<std::size_t>(i)]; }
  Var& d1(int i) { return d1_[static_cast<std::size_t>(i)]; }
  const Var& d2(int i, int j) const { return d2_[packed(i, j)]; }
  Var& d2(int i, int j) { return d2_[packed(i, j)]; }

  // Derivative parts as plain matrices; zeros when structurally absent.
  Mat d1_value(int i) const;
  Mat d2_value(int i, int j) const;

 private:
  static std::size_t packed(int i, int j) {
    if (i < j) std::swap(i, j);
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(i + 1) / 2 + static_cast<std::size_t>(j);
  }

  Var value_;
  std::vector<Var> d1_;
  std::vector<Var> d2_;
  int order_ = 0;
};

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator-(const Jet& a);
Jet operator*(const Jet& a, const Jet& b);  // Hadamard product rule
Jet operator*(double s, const Jet& a);
Jet add_scalar(const Jet& a, double s);
Jet mul_const(const Jet& a, const Mat& c);
Jet square(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet gelu(const Jet& a);

// W * x + b with W (out x in), b (out x 1); b may be null.
Jet affine(Var weight, const Jet& x, Var bias);
Jet row(const Jet& a, Index i);
Jet vcat(std::span<const Jet> parts);
Jet col_sum(const Jet& a);

}  // namespace dlda::ad
