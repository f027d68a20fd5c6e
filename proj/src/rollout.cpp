#include "dlda/rollout.hpp"

#include "dlda/error.hpp"

#include <cmath>
#include <limits>

namespace dlda {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void NewtonConfig::validate() const {
  if (!(tol > 0.0)) throw ConfigError("newton: tol must be > 0");
  if (max_iters < 1) throw ConfigError("newton: max_iters must be >= 1");
  if (halvings < 0) throw ConfigError("newton: halvings must be >= 0");
  if (stall_tol < tol) throw ConfigError("newton: stall_tol must be >= tol");
}

namespace {

double part(const ad::Var& v) { return v ? v.value()(0, 0) : 0.0; }

std::vector<ad::Jet> seeded(ad::Tape& tape, const VectorXd& x, int first_dir, int dirs, int order) {
  std::vector<ad::Jet> out;
  for (Index i = 0; i < x.size(); ++i) {
    const ad::Var v = tape.constant(MatrixXd::Constant(1, 1, x(i)));
    out.push_back(order > 0 ? ad::Jet::seed(v, first_dir + static_cast<int>(i), dirs, order) : ad::Jet(v, dirs, 0));
  }
  return out;
}

// Residual pieces of one midpoint segment.
struct Segment {
  VectorXd gq, gv, f;
  MatrixXd hqq, hqv, hvq, hvv, fq, fv;
};

Segment segment(const LagrangianModel& lagrangian, const ForceModel& force, const ParameterStore& params,
                const VectorXd& qbar, const VectorXd& vbar, bool jacobian) {
  const int d = lagrangian.dim;
  const int order = jacobian ? 2 : 1;
  ad::Tape tape;
  ParamSource src(tape, params, false);
  const auto qj = seeded(tape, qbar, 0, 2 * d, order);
  const auto vj = seeded(tape, vbar, d, 2 * d, order);
  const ad::Jet l = lagrangian_jet(lagrangian, src, qj, vj);
  Segment s;
  s.gq.resize(d);
  s.gv.resize(d);
  for (int i = 0; i < d; ++i) {
    s.gq(i) = part(l.d1(i));
    s.gv(i) = part(l.d1(d + i));
  }
  s.f = VectorXd::Zero(d);
  if (jacobian) {
    s.hqq.resize(d, d);
    s.hqv.resize(d, d);
    s.hvq.resize(d, d);
    s.hvv.resize(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        s.hqq(i, j) = part(l.d2(i, j));
        s.hqv(i, j) = part(l.d2(i, d + j));
        s.hvq(i, j) = part(l.d2(d + i, j));
        s.hvv(i, j) = part(l.d2(d + i, d + j));
      }
    s.fq = MatrixXd::Zero(d, d);
    s.fv = MatrixXd::Zero(d, d);
  }
  if (!force.is_zero()) {
    // Force derivatives only need first order.
    ad::Tape ft;
    ParamSource fsrc(ft, params, false);
    const int fo = jacobian ? 1 : 0;
    const int fdirs = jacobian ? 2 * d : 0;
    const auto fq = seeded(ft, qbar, 0, fdirs, fo);
    const auto fv = seeded(ft, vbar, d, fdirs, fo);
    const auto f = force_jet(force, fsrc, fq, fv);
    for (int i = 0; i < d; ++i) {
      s.f(i) = part(f[static_cast<std::size_t>(i)].value());
      if (jacobian)
        for (int j = 0; j < d; ++j) {
          s.fq(i, j) = part(f[static_cast<std::size_t>(i)].d1(j));
          s.fv(i, j) = part(f[static_cast<std::size_t>(i)].d1(d + j));
        }
    }
  }
  return s;
}

struct Eval {
  VectorXd r;
  MatrixXd jac;
};

class MidpointResidual {
 public:
  MidpointResidual(const LagrangianModel& l, const ForceModel& f, const ParameterStore& p, const VectorXd& q_prev,
                   const VectorXd& q_curr, double h)
      : l_(l), f_(f), p_(p), q_curr_(q_curr), h_(h) {
    const auto [qbar, vbar] = midpoint_pair(q_prev, q_curr, h);
    const Segment m = segment(l, f, p, qbar, vbar, false);
    fixed_ = m.gq + (2.0 / h) * m.gv + m.f;
  }

  Eval operator()(const VectorXd& x, bool jacobian) const {
    const auto [qbar, vbar] = midpoint_pair(q_curr_, x, h_);
    const Segment s = segment(l_, f_, p_, qbar, vbar, jacobian);
    Eval e;
    e.r = fixed_ + s.gq - (2.0 / h_) * s.gv + s.f;
    if (jacobian) {
      const double a = 0.5, b = 1.0 / h_;
      e.jac = a * s.hqq + b * s.hqv - (2.0 / h_) * (a * s.hvq + b * s.hvv) + a * s.fq + b * s.fv;
    }
    return e;
  }

 private:
  const LagrangianModel& l_;
  const ForceModel& f_;
  const ParameterStore& p_;
  VectorXd q_curr_;
  double h_;
  VectorXd fixed_;
};

struct NewtonOutcome {
  VectorXd x;
  double norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
};

NewtonOutcome newton(const MidpointResidual& res, VectorXd x, const NewtonConfig& cfg) {
  NewtonOutcome best;
  Eval e = res(x, true);
  double norm = e.r.lpNorm<Eigen::Infinity>();
  best.x = x;
  best.norm = std::isfinite(norm) ? norm : std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (norm <= cfg.tol) {
      best.converged = true;
      best.iterations = it;
      return best;
    }
    if (!e.r.allFinite() || !e.jac.allFinite()) break;
    const auto lu = e.jac.fullPivLu();
    if (!lu.isInvertible()) break;
    const VectorXd dx = lu.solve(-e.r);
    // Step below round-off: the residual cannot be reduced further.
    if (dx.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      best.stalled = true;
      break;
    }
    const double n2 = e.r.norm();
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k <= cfg.halvings; ++k, alpha *= 0.5) {
      const VectorXd xt = x + alpha * dx;
      const Eval et = res(xt, false);
      if (et.r.allFinite() && et.r.norm() < n2) {
        x = xt;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      best.stalled = true;
      break;
    }
    e = res(x, true);
    norm = e.r.lpNorm<Eigen::Infinity>();
    best.iterations = it + 1;
    if (std::isfinite(norm) && norm < best.norm) {
      best.norm = norm;
      best.x = x;
    }
  }
  best.converged = best.norm <= cfg.tol || (best.stalled && best.norm <= cfg.stall_tol);
  return best;
}

}  // namespace

StepInfo implicit_step_info(const LagrangianModel& lagrangian, const ForceModel& force, const ParameterStore& params,
                            const VectorXd& q_prev, const VectorXd& q_curr, double h, const NewtonConfig& cfg) {
  cfg.validate();
  if (q_prev.size() != lagrangian.dim || q_curr.size() != lagrangian.dim || force.dim != lagrangian.dim) {
    throw DimensionError("implicit_step: dimension mismatch");
  }
  const MidpointResidual res(lagrangian, force, params, q_prev, q_curr, h);
  NewtonOutcome out = newton(res, 2.0 * q_curr - q_prev, cfg);
  bool retried = false;
  if (!out.converged) {
    retried = true;
    NewtonOutcome again = newton(res, q_curr, cfg);
    if (again.norm < out.norm) out = again;
  }
  if (!out.converged) {
    throw ConvergenceError("implicit_step: Newton did not converge (residual " + std::to_string(out.norm) + ")", out.x,
                           out.norm);
  }
  return {out.x, out.iterations, out.norm, retried};
}

VectorXd implicit_step(const LagrangianModel& lagrangian, const ForceModel& force, const ParameterStore& params,
                       const VectorXd& q_prev, const VectorXd& q_curr, const Scheme& scheme, const NewtonConfig& cfg) {
  if (scheme.kind != SchemeKind::Midpoint) throw ConfigError("implicit_step: only the midpoint scheme can be rolled out");
  return implicit_step_info(lagrangian, force, params, q_prev, q_curr, scheme.h, cfg).q;
}

RolloutResult rollout(const LagrangianModel& lagrangian, const ForceModel& force, const ParameterStore& params,
                      const VectorXd& q0, const VectorXd& q1, int n, bool force_on, const Scheme& scheme,
                      const NewtonConfig& cfg) {
  if (scheme.kind != SchemeKind::Midpoint) throw ConfigError("rollout: only the midpoint scheme can be rolled out");
  if (n < 1) throw ConfigError("rollout: N must be >= 1");
  if (q0.size() != lagrangian.dim || q1.size() != lagrangian.dim) throw DimensionError("rollout: dimension mismatch");
  const ForceModel zero = zero_force(lagrangian.dim);
  const ForceModel& f = force_on ? force : zero;
  RolloutResult r;
  r.q = MatrixXd::Constant(lagrangian.dim, n + 1, std::numeric_limits<double>::quiet_NaN());
  r.q.col(0) = q0;
  r.q.col(1) = q1;
  for (int k = 2; k <= n; ++k) {
    try {
      const StepInfo s = implicit_step_info(lagrangian, f, params, r.q.col(k - 2), r.q.col(k - 1), scheme.h, cfg);
      r.q.col(k) = s.q;
      r.iterations.push_back(s.iterations);
      r.converged.push_back(true);
      r.residual_norms.push_back(s.residual_norm);
    } catch (const ConvergenceError& e) {
      r.iterations.push_back(cfg.max_iters);
      r.converged.push_back(false);
      r.residual_norms.push_back(e.residual_norm());
      throw RolloutError(e, r, k);
    }
  }
  return r;
}

double energy(const LagrangianModel& lagrangian, const ParameterStore& params, const VectorXd& qbar,
              const VectorXd& vbar) {
  const int d = lagrangian.dim;
  if (qbar.size() != d || vbar.size() != d) throw DimensionError("energy: dimension mismatch");
  ad::Tape tape;
  ParamSource src(tape, params, false);
  const auto qj = seeded(tape, qbar, 0, d, 0);
  std::vector<ad::Jet> q1;
  for (const auto& j : qj) q1.emplace_back(j.value(), d, 1);
  const auto vj = seeded(tape, vbar, 0, d, 1);
  const ad::Jet l = lagrangian_jet(lagrangian, src, q1, vj);
  double e = -part(l.value());
  for (int i = 0; i < d; ++i) e += vbar(i) * part(l.d1(i));
  return e;
}

std::vector<double> extrapolation_errors(const std::vector<MatrixXd>& preds, const std::vector<MatrixXd>& truths,
                                         Index k) {
  if (preds.size() != truths.size() || preds.empty()) throw DimensionError("extrapolation_error: trajectory count mismatch");
  std::vector<double> out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (k < 0 || k >= preds[i].cols() || k >= truths[i].cols()) throw DimensionError("extrapolation_error: k out of range");
    if (preds[i].rows() != truths[i].rows()) throw DimensionError("extrapolation_error: dimension mismatch");
    out.push_back((truths[i].col(k) - preds[i].col(k)).squaredNorm());
  }
  return out;
}

double extrapolation_error(const std::vector<MatrixXd>& preds, const std::vector<MatrixXd>& truths, Index k) {
  const auto e = extrapolation_errors(preds, truths, k);
  double s = 0.0;
  for (double v : e) s += v;
  return s / static_cast<double>(e.size());
}

}  // namespace dlda
