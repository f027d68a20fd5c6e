#include "dlda/jet.hpp"

#include "dlda/error.hpp"

namespace dlda::ad {

Jet::Jet(Var value, int dirs, int order) : value_(value), order_(order) {
  if (dirs < 0 || order < 0 || order > 2) throw DimensionError("Jet: invalid layout");
  if (order >= 1) d1_.resize(static_cast<std::size_t>(dirs));
  if (order >= 2) d2_.resize(static_cast<std::size_t>(dirs) * static_cast<std::size_t>(dirs + 1) / 2);
}

Jet Jet::seed(Var value, int dir, int dirs, int order) {
  Jet j(value, dirs, order);
  if (order >= 1) {
    if (dir < 0 || dir >= dirs) throw DimensionError("Jet::seed: direction out of range");
    j.d1(dir) = value.tape()->constant(Mat::Ones(value.rows(), value.cols()));
  }
  return j;
}

Mat Jet::d1_value(int i) const {
  const Var& v = d1(i);
  return v ? v.value() : Mat::Zero(rows(), cols());
}

Mat Jet::d2_value(int i, int j) const {
  const Var& v = d2(i, j);
  return v ? v.value() : Mat::Zero(rows(), cols());
}

namespace {

void check_layout(const Jet& a, const Jet& b) {
  if (a.dirs() != b.dirs() || a.order() != b.order()) throw DimensionError("Jet layouts differ");
}

Jet like(const Jet& a, Var value) { return Jet(value, a.dirs(), a.order()); }

// Chain rule for an elementwise f given f(v), f'(v), f''(v) as nodes.
Jet chain(const Jet& a, Var f0, Var f1, Var f2) {
  Jet out = like(a, f0);
  const int n = a.dirs();
  if (a.order() >= 1) {
    for (int i = 0; i < n; ++i) out.d1(i) = mul(f1, a.d1(i));
  }
  if (a.order() >= 2) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        out.d2(i, j) = add(mul(f2, mul(a.d1(i), a.d1(j))), mul(f1, a.d2(i, j)));
      }
    }
  }
  return out;
}

}  // namespace

Jet operator+(const Jet& a, const Jet& b) {
  check_layout(a, b);
  Jet out = like(a, add(a.value(), b.value()));
  for (int i = 0; i < a.dirs() && a.order() >= 1; ++i) out.d1(i) = add(a.d1(i), b.d1(i));
  if (a.order() >= 2) {
    for (int i = 0; i < a.dirs(); ++i)
      for (int j = 0; j <= i; ++j) out.d2(i, j) = add(a.d2(i, j), b.d2(i, j));
  }
  return out;
}

Jet operator-(const Jet& a, const Jet& b) {
  check_layout(a, b);
  Jet out = like(a, sub(a.value(), b.value()));
  for (int i = 0; i < a.dirs() && a.order() >= 1; ++i) out.d1(i) = sub(a.d1(i), b.d1(i));
  if (a.order() >= 2) {
    for (int i = 0; i < a.dirs(); ++i)
      for (int j = 0; j <= i; ++j) out.d2(i, j) = sub(a.d2(i, j), b.d2(i, j));
  }
  return out;
}

Jet operator-(const Jet& a) { return -1.0 * a; }

Jet operator*(double s, const Jet& a) {
  Jet out = like(a, scale(a.value(), s));
  for (int i = 0; i < a.dirs() && a.order() >= 1; ++i) out.d1(i) = scale(a.d1(i), s);
  if (a.order() >= 2) {
    for (int i = 0; i < a.dirs(); ++i)
      for (int j = 0; j <= i; ++j) out.d2(i, j) = scale(a.d2(i, j), s);
  }
  return out;
}

Jet operator*(const Jet& a, const Jet& b) {
  check_layout(a, b);
  Jet out = like(a, mul(a.value(), b.value()));
  const int n = a.dirs();
  if (a.order() >= 1) {
    for (int i = 0; i < n; ++i) out.d1(i) = add(mul(a.d1(i), b.value()), mul(a.value(), b.d1(i)));
  }
  if (a.order() >= 2) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        Var t = add(mul(a.d2(i, j), b.value()), mul(a.value(), b.d2(i, j)));
        t = add(t, mul(a.d1(i), b.d1(j)));
        t = add(t, mul(a.d1(j), b.d1(i)));
        out.d2(i, j) = t;
      }
    }
  }
  return out;
}

Jet add_scalar(const Jet& a, double s) {
  Jet out = a;
  out.value() = add_scalar(a.value(), s);
  return out;
}

Jet mul_const(const Jet& a, const Mat& c) {
  Jet out = like(a, mul_const(a.value(), c));
  for (int i = 0; i < a.dirs() && a.order() >= 1; ++i) out.d1(i) = mul_const(a.d1(i), c);
  if (a.order() >= 2) {
    for (int i = 0; i < a.dirs(); ++i)
      for (int j = 0; j <= i; ++j) out.d2(i, j) = mul_const(a.d2(i, j), c);
  }
  return out;
}

Jet square(const Jet& a) { return a * a; }

Jet sin(const Jet& a) {
  Var v = a.value();
  Var s = sin(v);
  Var c = a.order() >= 1 ? cos(v) : Var();
  Var s2 = a.order() >= 2 ? neg(s) : Var();
  return chain(a, s, c, s2);
}

Jet cos(const Jet& a) {
  Var v = a.value();
  Var c = cos(v);
  Var ns = a.order() >= 1 ? neg(sin(v)) : Var();
  Var nc = a.order() >= 2 ? neg(c) : Var();
  return chain(a, c, ns, nc);
}

Jet gelu(const Jet& a) {
  Var v = a.value();
  return chain(a, gelu(v, 0), a.order() >= 1 ? gelu(v, 1) : Var(), a.order() >= 2 ? gelu(v, 2) : Var());
}

Jet affine(Var weight, const Jet& x, Var bias) {
  Var v = matmul(weight, x.value());
  if (bias) v = add_bias(v, bias);
  Jet out = like(x, v);
  for (int i = 0; i < x.dirs() && x.order() >= 1; ++i) {
    if (x.d1(i)) out.d1(i) = matmul(weight, x.d1(i));
  }
  if (x.order() >= 2) {
    for (int i = 0; i < x.dirs(); ++i)
      for (int j = 0; j <= i; ++j)
        if (x.d2(i, j)) out.d2(i, j) = matmul(weight, x.d2(i, j));
  }
  return out;
}

Jet row(const Jet& a, Index r) {
  Jet out = like(a, row(a.value(), r));
  for (int i = 0; i < a.dirs() && a.order() >= 1; ++i)
    if (a.d1(i)) out.d1(i) = row(a.d1(i), r);
  if (a.order() >= 2) {
    for (int i = 0; i < a.dirs(); ++i)
      for (int j = 0; j <= i; ++j)
        if (a.d2(i, j)) out.d2(i, j) = row(a.d2(i, j), r);
  }
  return out;
}

namespace {

// Stacks one part across jets, filling absent parts with zeros. Returns null
// if every part is absent.
template <typename Get>
Var stack_part(std::span<const Jet> parts, Get get) {
  Tape* tape = nullptr;
  for (const Jet& p : parts)
    if (Var v = get(p)) tape = v.tape();
  if (tape == nullptr) return Var();
  std::vector<Var> blocks;
  blocks.reserve(parts.size());
  for (const Jet& p : parts) {
    Var v = get(p);
    blocks.push_back(v ? v : tape->constant(Mat::Zero(p.rows(), p.cols())));
  }
  return vcat(blocks);
}

}  // namespace

Jet vcat(std::span<const Jet> parts) {
  if (parts.empty()) throw DimensionError("vcat: no jets");
  for (const Jet& p : parts) check_layout(parts.front(), p);
  const Jet& f = parts.front();
  Jet out = like(f, stack_part(parts, [](const Jet& p) { return p.value(); }));
  for (int i = 0; i < f.dirs() && f.order() >= 1; ++i)
    out.d1(i) = stack_part(parts, [i](const Jet& p) { return p.d1(i); });
  if (f.order() >= 2) {
    for (int i = 0; i < f.dirs(); ++i)
      for (int j = 0; j <= i; ++j) out.d2(i, j) = stack_part(parts, [i, j](const Jet& p) { return p.d2(i, j); });
  }
  return out;
}

Jet col_sum(const Jet& a) {
  Jet out = like(a, col_sum(a.value()));
  for (int i = 0; i < a.dirs() && a.order() >= 1; ++i)
    if (a.d1(i)) out.d1(i) = col_sum(a.d1(i));
  if (a.order() >= 2) {
    for (int i = 0; i < a.dirs(); ++i)
      for (int j = 0; j <= i; ++j)
        if (a.d2(i, j)) out.d2(i, j) = col_sum(a.d2(i, j));
  }
  return out;
}

}  // namespace dlda::ad
