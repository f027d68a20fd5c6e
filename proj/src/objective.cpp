#include "dlda/objective.hpp"

#include "dlda/error.hpp"

#include <cmath>
#include <limits>

namespace dlda {

using Eigen::Index;

void LossWeights::validate() const {
  if (physics < 0.0 || reg < 0.0 || ae < 0.0) throw ConfigError("loss weights must be >= 0");
  if (reg_points < 0) throw ConfigError("reg_points must be >= 0");
}

double physics_loss(const LagrangianModel& lagrangian, const ForceModel& force, const ParameterStore& params,
                    const Eigen::MatrixXd& window, const Scheme& scheme, bool squared) {
  const Eigen::VectorXd r = del_residual(lagrangian, force, params, window, scheme);
  const double n = 0.5 * scheme.h * std::sqrt(r.squaredNorm() + (squared ? 0.0 : kResidualSmoothing));
  return squared ? n * n : n;
}

namespace {

// S entries in column-major order as a (d*d x B) node.
ad::Var hessian_v(const LagrangianModel& lagrangian, ParamSource& params, ad::Var qbar, ad::Var vbar) {
  const int d = lagrangian.dim;
  ad::Tape& tape = params.tape();
  std::vector<ad::Jet> qj, vj;
  for (int i = 0; i < d; ++i) {
    qj.emplace_back(ad::row(qbar, i), d, 2);
    vj.push_back(ad::Jet::seed(ad::row(vbar, i), i, d, 2));
  }
  const ad::Jet l = lagrangian_jet(lagrangian, params, qj, vj);
  std::vector<ad::Var> entries;
  const ad::Var zero = tape.constant(Eigen::MatrixXd::Zero(1, qbar.cols()));
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      const ad::Var e = l.d2(i, j);
      entries.push_back(e ? e : zero);
    }
  return ad::vcat(entries);
}

}  // namespace

Eigen::MatrixXd velocity_hessian(const LagrangianModel& lagrangian, const ParameterStore& params,
                                 const Eigen::VectorXd& qbar, const Eigen::VectorXd& vbar) {
  const int d = lagrangian.dim;
  if (qbar.size() != d || vbar.size() != d) throw DimensionError("velocity_hessian: dimension mismatch");
  ad::Tape tape;
  ParamSource src(tape, params, false);
  const Eigen::MatrixXd s = hessian_v(lagrangian, src, tape.constant(qbar), tape.constant(vbar)).value();
  return Eigen::Map<const Eigen::MatrixXd>(s.data(), d, d);
}

double reg_loss(const LagrangianModel& lagrangian, const ParameterStore& params, const RegPoint& point, double h) {
  const auto [qbar, vbar] = midpoint_pair(point.qa, point.qb, h);
  const Eigen::MatrixXd s = velocity_hessian(lagrangian, params, qbar, vbar);
  const double det = s.partialPivLu().determinant();
  if (det == 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(std::log(std::abs(det)));
}

double ae_loss(const Autoencoder& ae, const ParameterStore& params, const Eigen::VectorXd& q) {
  if (q.size() != ae.spec.data_dim) throw DimensionError("ae_loss: dimension mismatch");
  const Eigen::MatrixXd rec = ae.decode(params, ae.encode(params, q));
  return static_cast<double>(ae.spec.data_dim) / ae.spec.latent_dim * (q - rec.col(0)).squaredNorm();
}

Batch make_batch(const Dataset& data, const Scheme& scheme) {
  if (data.empty()) throw DimensionError("empty dataset");
  const int d = data.front().dim();
  std::vector<Index> lengths;
  Index total = 0;
  for (const auto& t : data) {
    if (t.dim() != d) throw DimensionError("dataset trajectories differ in dimension");
    lengths.push_back(t.samples());
    total += t.samples();
  }
  Batch b;
  b.positions.resize(d, total);
  Index c = 0;
  for (const auto& t : data) {
    b.positions.middleCols(c, t.samples()) = t.q;
    c += t.samples();
  }
  b.plan = make_window_plan(lengths, scheme);
  b.trajectories = static_cast<Index>(data.size());
  return b;
}

ad::Var physics_sum(const DynamicsModel& model, ParamSource& params, ad::Var positions, const WindowPlan& plan,
                    bool squared, DropoutState* dropout) {
  const ad::Var r = residual_batch(model.lagrangian, model.force, params, positions, plan, dropout);
  const double half_h = 0.5 * plan.scheme.h;
  ad::Var norm2 = ad::col_sum(ad::square(r));
  if (squared) return ad::sum(ad::scale(norm2, half_h * half_h));
  return ad::sum(ad::scale(ad::sqrt(ad::add_scalar(norm2, kResidualSmoothing)), half_h));
}

ad::Var reg_logabsdet(const LagrangianModel& lagrangian, ParamSource& params, ad::Var qa, ad::Var qb, double h) {
  const ad::Var qbar = ad::scale(ad::add(qa, qb), 0.5);
  const ad::Var vbar = ad::scale(ad::sub(qb, qa), 1.0 / h);
  return ad::logabsdet(hessian_v(lagrangian, params, qbar, vbar), lagrangian.dim);
}

RegSet make_reg_set(const std::vector<RegPoint>& points, double h) {
  RegSet s;
  s.h = h;
  if (points.empty()) return s;
  const Index d = points.front().qa.size();
  s.qa.resize(d, static_cast<Index>(points.size()));
  s.qb.resize(d, static_cast<Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    s.qa.col(static_cast<Index>(i)) = points[i].qa;
    s.qb.col(static_cast<Index>(i)) = points[i].qb;
  }
  return s;
}

LossParts dflnn_loss(const DynamicsModel& model, ParamSource& params, const Batch& data, const RegSet& reg,
                     const LossWeights& weights, DropoutState* dropout) {
  ad::Tape& tape = params.tape();
  LossParts out;
  const double norm = weights.normalizer == PhysicsNormalizer::Samples ? static_cast<double>(data.plan.num_samples)
                                                                       : static_cast<double>(data.plan.num_windows);
  const ad::Var phys = physics_sum(model, params, tape.constant(data.positions), data.plan, weights.squared_residual, dropout);
  out.physics = ad::scale(phys, weights.physics / norm);
  out.total = out.physics;
  if (reg.size() > 0) {
    const ad::Var lad = reg_logabsdet(model.lagrangian, params, tape.constant(reg.qa), tape.constant(reg.qb), reg.h);
    out.logabsdet = lad.value();
    if (weights.reg > 0.0) {
      out.reg = ad::scale(ad::sum(ad::abs(lad)), weights.reg / static_cast<double>(reg.size()));
      out.total = ad::add(out.total, out.reg);
    }
  }
  return out;
}

double total_loss(const Dataset& data, const DynamicsModel& model, const ParameterStore& params,
                  const LossWeights& weights, const Scheme& scheme, const std::vector<RegPoint>& reg_points) {
  weights.validate();
  const Batch batch = make_batch(data, scheme);
  ad::Tape tape;
  ParamSource src(tape, params, false);
  const RegSet reg = make_reg_set(reg_points, scheme.h);
  return dflnn_loss(model, src, batch, reg, weights).total.scalar();
}

}  // namespace dlda
