#include "dlda/discretization.hpp"

#include "dlda/error.hpp"

#include <cmath>
#include <map>

namespace dlda {

using Eigen::Index;

void Scheme::validate() const {
  if (!(h > 0.0)) throw ConfigError("scheme: h must be > 0");
  if (kind == SchemeKind::Multistep && k < 1) throw ConfigError("scheme: multistep k must be >= 1");
}

PointStencil Scheme::point_stencil() const {
  validate();
  if (kind == SchemeKind::Midpoint) return {{0, 1}, {0.5, 0.5}, {-1.0, 1.0}};
  const Stencil s = multistep_coeffs(k);
  PointStencil p;
  for (int j = -k; j <= k; ++j) {
    p.offsets.push_back(j);
    p.qbar.push_back(s.qbar_coeffs[static_cast<std::size_t>(j + k)]);
    p.vbar.push_back(s.vbar_coeffs[static_cast<std::size_t>(j + k)]);
  }
  return p;
}

int Scheme::window_size() const { return kind == SchemeKind::Midpoint ? 3 : 4 * k + 1; }

std::pair<Eigen::VectorXd, Eigen::VectorXd> midpoint_pair(const Eigen::VectorXd& qa, const Eigen::VectorXd& qb, double h) {
  if (qa.size() != qb.size()) throw DimensionError("midpoint_pair: dimension mismatch");
  if (!(h > 0.0)) throw ConfigError("midpoint_pair: h must be > 0");
  return {0.5 * (qa + qb), (qb - qa) / h};
}

Stencil multistep_coeffs(int k) {
  if (k < 1) throw ConfigError("multistep_coeffs: k must be >= 1");
  Stencil s;
  s.k = k;
  for (int j = 1; j <= k; ++j) {
    // k!^2 / ((k-j)! (k+j)!) as a running product.
    double r = 1.0;
    for (int i = 1; i <= j; ++i) r *= static_cast<double>(k - i + 1) / static_cast<double>(k + i);
    s.delta.push_back((j % 2 == 1 ? 1.0 : -1.0) / j * r);
  }
  const auto n = static_cast<std::size_t>(2 * k + 1);
  s.qbar_coeffs.assign(n, 0.0);
  s.vbar_coeffs.assign(n, 0.0);
  auto at = [k](int j) { return static_cast<std::size_t>(j + k); };
  for (int j = 1; j <= k; ++j) {
    const double dj = s.delta[static_cast<std::size_t>(j - 1)];
    s.vbar_coeffs[at(j)] = dj;
    s.vbar_coeffs[at(-j)] = -dj;
    s.qbar_coeffs[at(-j)] = dj;
    s.qbar_coeffs[at(j)] = j == 1 ? 1.0 - dj : -dj;
  }
  double sum = 0.0, moment = 0.0, vmoment = 0.0;
  for (int j = -k; j <= k; ++j) {
    sum += s.qbar_coeffs[at(j)];
    moment += j * s.qbar_coeffs[at(j)];
    vmoment += j * s.vbar_coeffs[at(j)];
  }
  if (std::abs(sum - 1.0) > 1e-12 || std::abs(moment) > 1e-12 || std::abs(vmoment - 1.0) > 1e-12) {
    throw ConfigError("multistep_coeffs: inconsistent stencil for k=" + std::to_string(k));
  }
  return s;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> multistep_pair(const Eigen::MatrixXd& window, double h, const Stencil& s) {
  if (window.cols() != 2 * s.k + 1) {
    throw DimensionError("multistep_pair: expected " + std::to_string(2 * s.k + 1) + " samples, got " +
                         std::to_string(window.cols()));
  }
  if (!(h > 0.0)) throw ConfigError("multistep_pair: h must be > 0");
  Eigen::VectorXd q = Eigen::VectorXd::Zero(window.rows());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(window.rows());
  for (Index c = 0; c < window.cols(); ++c) {
    q += s.qbar_coeffs[static_cast<std::size_t>(c)] * window.col(c);
    v += s.vbar_coeffs[static_cast<std::size_t>(c)] * window.col(c);
  }
  return {q, v / h};
}

WindowPlan make_window_plan(std::span<const Index> lengths, const Scheme& scheme) {
  WindowPlan plan;
  plan.scheme = scheme;
  plan.stencil = scheme.point_stencil();
  const auto& off = plan.stencil.offsets;
  const std::size_t slots = off.size();
  const int lo = off.front();
  const int hi = off.back();
  plan.point_src.assign(slots, {});
  plan.window_src.assign(slots, {});
  Index base = 0;
  for (Index len : lengths) {
    if (len < 0) throw DimensionError("window plan: negative trajectory length");
    // Anchors i with all of i+offsets inside [0, len).
    std::map<Index, Index> point_of;
    for (Index i = -lo; i + hi < len; ++i) {
      point_of[i] = plan.num_points++;
      for (std::size_t s = 0; s < slots; ++s) plan.point_src[s].push_back(base + i + off[s]);
    }
    for (Index n = 0; n < len; ++n) {
      bool ok = true;
      for (int j : off) ok = ok && point_of.count(n - j) > 0;
      if (!ok) continue;
      for (std::size_t s = 0; s < slots; ++s) plan.window_src[s].push_back(point_of[n - off[s]]);
      plan.window_centre.push_back(base + n);
      ++plan.num_windows;
    }
    base += len;
  }
  plan.num_samples = base;
  return plan;
}

PointValues plan_points(ad::Var positions, const WindowPlan& plan) {
  if (positions.cols() != plan.num_samples) throw DimensionError("plan_points: sample count does not match plan");
  PointValues out;
  const auto& st = plan.stencil;
  const double inv_h = 1.0 / plan.scheme.h;
  for (std::size_t s = 0; s < st.offsets.size(); ++s) {
    if (st.qbar[s] == 0.0 && st.vbar[s] == 0.0) continue;
    const ad::Var g = ad::gather_cols(positions, plan.point_src[s]);
    if (st.qbar[s] != 0.0) out.qbar = ad::add(out.qbar, ad::scale(g, st.qbar[s]));
    if (st.vbar[s] != 0.0) out.vbar = ad::add(out.vbar, ad::scale(g, st.vbar[s] * inv_h));
  }
  return out;
}

ad::Var residual_batch(const LagrangianModel& lagrangian, const ForceModel& force, ParamSource& params,
                       ad::Var positions, const WindowPlan& plan, DropoutState* dropout) {
  const int d = lagrangian.dim;
  if (positions.rows() != d || force.dim != d) throw DimensionError("del_residual: dimension mismatch");
  if (plan.num_windows == 0) throw DimensionError("del_residual: no complete window");
  ad::Tape& tape = params.tape();
  const PointValues pv = plan_points(positions, plan);
  const Index np = plan.num_points;

  std::vector<ad::Jet> qj, vj;
  for (int i = 0; i < d; ++i) {
    qj.push_back(ad::Jet::seed(ad::row(pv.qbar, i), i, 2 * d, 1));
    vj.push_back(ad::Jet::seed(ad::row(pv.vbar, i), d + i, 2 * d, 1));
  }
  const ad::Jet l = lagrangian_jet(lagrangian, params, qj, vj);

  std::vector<ad::Var> fq(static_cast<std::size_t>(d));
  if (!force.is_zero()) {
    std::vector<ad::Jet> q0, v0;
    for (int i = 0; i < d; ++i) {
      q0.emplace_back(qj[static_cast<std::size_t>(i)].value(), 0, 0);
      v0.emplace_back(vj[static_cast<std::size_t>(i)].value(), 0, 0);
    }
    const auto f = force_jet(force, params, q0, v0, dropout);
    for (int i = 0; i < d; ++i) fq[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i)].value();
  }

  std::vector<ad::Var> a_rows, b_rows;
  const ad::Var zero = tape.constant(Eigen::MatrixXd::Zero(1, np));
  for (int i = 0; i < d; ++i) {
    ad::Var a = ad::add(l.d1(i), fq[static_cast<std::size_t>(i)]);
    ad::Var b = l.d1(d + i);
    a_rows.push_back(a ? a : zero);
    b_rows.push_back(b ? b : zero);
  }
  const ad::Var a = ad::vcat(a_rows);
  const ad::Var b = ad::vcat(b_rows);

  const auto& st = plan.stencil;
  const double inv_h = 1.0 / plan.scheme.h;
  ad::Var r;
  for (std::size_t s = 0; s < st.offsets.size(); ++s) {
    if (st.qbar[s] != 0.0) r = ad::add(r, ad::scale(ad::gather_cols(a, plan.window_src[s]), 2.0 * st.qbar[s]));
    if (st.vbar[s] != 0.0) r = ad::add(r, ad::scale(ad::gather_cols(b, plan.window_src[s]), 2.0 * st.vbar[s] * inv_h));
  }
  return r;
}

Eigen::VectorXd del_residual(const LagrangianModel& lagrangian, const ForceModel& force, const ParameterStore& params,
                             const Eigen::MatrixXd& window, const Scheme& scheme) {
  if (window.cols() != scheme.window_size()) {
    throw DimensionError("del_residual: expected a window of " + std::to_string(scheme.window_size()) + " samples, got " +
                         std::to_string(window.cols()));
  }
  if (window.rows() != lagrangian.dim) throw DimensionError("del_residual: dimension mismatch");
  const Index len = window.cols();
  const WindowPlan plan = make_window_plan(std::span<const Index>(&len, 1), scheme);
  ad::Tape tape;
  ParamSource src(tape, params, false);
  return residual_batch(lagrangian, force, src, tape.constant(window), plan).value().col(0);
}

}  // namespace dlda
