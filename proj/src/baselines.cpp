#include "dlda/baselines.hpp"

#include "dlda/error.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace dlda {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

BaselineModel BaselineModel::make_glnn(DynamicsModel model) {
  BaselineModel b;
  b.kind = BaselineKind::Glnn;
  b.dim = model.lagrangian.dim;
  b.glnn = std::move(model);
  return b;
}

BaselineModel BaselineModel::create_node(ParameterStore& store, int d, int hidden_dim, int hidden_layers,
                                         const std::string& prefix) {
  BaselineModel b;
  b.kind = BaselineKind::NeuralOde;
  b.dim = d;
  b.field = Mlp::create(store, prefix + ".field", MlpSpec{2 * d, hidden_dim, hidden_layers, 2 * d});
  return b;
}

BaselineModel BaselineModel::bind_node(const ParameterStore& store, int d, int hidden_dim, int hidden_layers,
                                       const std::string& prefix) {
  BaselineModel b;
  b.kind = BaselineKind::NeuralOde;
  b.dim = d;
  b.field = Mlp::bind(store, prefix + ".field", MlpSpec{2 * d, hidden_dim, hidden_layers, 2 * d});
  return b;
}

std::string to_string(BaselineKind k) { return k == BaselineKind::Glnn ? "glnn" : "node"; }

namespace {

ad::Var rows(ad::Var x, int first, int count) {
  std::vector<ad::Var> r;
  for (int i = 0; i < count; ++i) r.push_back(ad::row(x, first + i));
  return count == 1 ? r.front() : ad::vcat(r);
}

ad::Var field(const BaselineModel& model, ParamSource& params, ad::Var x, DropoutState* dropout) {
  const int d = model.dim;
  if (model.kind == BaselineKind::NeuralOde) return model.field.forward(params, ad::Jet(x, 0, 0)).value();
  const ad::Var q = rows(x, 0, d);
  const ad::Var v = rows(x, d, d);
  const ad::Var a = glnn_accel_batch(model.glnn.lagrangian, model.glnn.force, params, q, v, dropout);
  const ad::Var parts[] = {v, a};
  return ad::vcat(parts);
}

std::string describe(const VectorXd& q, const VectorXd& v) {
  std::ostringstream os;
  os.precision(6);
  os << "q=(" << q.transpose() << ") v=(" << v.transpose() << ")";
  return os.str();
}

}  // namespace

ad::Var glnn_accel_batch(const LagrangianModel& lagrangian, const ForceModel& force, ParamSource& params, ad::Var q,
                         ad::Var v, DropoutState* dropout) {
  const int d = lagrangian.dim;
  if (q.rows() != d || v.rows() != d || q.cols() != v.cols()) throw DimensionError("glnn_accel: dimension mismatch");
  ad::Tape& tape = params.tape();
  std::vector<ad::Jet> qj, vj, q0, v0;
  for (int i = 0; i < d; ++i) {
    const ad::Var qi = ad::row(q, i);
    const ad::Var vi = ad::row(v, i);
    qj.push_back(ad::Jet::seed(qi, i, 2 * d, 2));
    vj.push_back(ad::Jet::seed(vi, d + i, 2 * d, 2));
    q0.emplace_back(qi, 0, 0);
    v0.emplace_back(vi, 0, 0);
  }
  const ad::Jet l = lagrangian_jet(lagrangian, params, qj, vj);
  const ad::Var zero = tape.constant(MatrixXd::Zero(1, q.cols()));
  auto nz = [&](const ad::Var& x) { return x ? x : zero; };

  std::vector<ad::Var> s;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) s.push_back(nz(l.d2(d + i, d + j)));

  std::vector<ad::Var> f(static_cast<std::size_t>(d));
  if (!force.is_zero()) {
    const auto fj = force_jet(force, params, q0, v0, dropout);
    for (int i = 0; i < d; ++i) f[static_cast<std::size_t>(i)] = fj[static_cast<std::size_t>(i)].value();
  }
  std::vector<ad::Var> rhs;
  for (int i = 0; i < d; ++i) {
    ad::Var r = ad::add(l.d1(i), f[static_cast<std::size_t>(i)]);
    for (int j = 0; j < d; ++j) r = ad::sub(r, ad::mul(l.d2(d + i, j), vj[static_cast<std::size_t>(j)].value()));
    rhs.push_back(nz(r));
  }
  return ad::solve(ad::vcat(s), ad::vcat(rhs), d);
}

VectorXd glnn_accel(const LagrangianModel& lagrangian, const ForceModel& force, const ParameterStore& params,
                    const VectorXd& q, const VectorXd& v) {
  if (q.size() != lagrangian.dim || v.size() != lagrangian.dim) throw DimensionError("glnn_accel: dimension mismatch");
  ad::Tape tape;
  ParamSource src(tape, params, false);
  const VectorXd a = glnn_accel_batch(lagrangian, force, src, tape.constant(q), tape.constant(v)).value().col(0);
  if (!a.allFinite()) throw SingularMatrixError("glnn_accel: singular velocity Hessian at " + describe(q, v));
  return a;
}

ad::Var baseline_step_batch(const BaselineModel& model, ParamSource& params, ad::Var x, double h,
                            DropoutState* dropout) {
  if (x.rows() != 2 * model.dim) throw DimensionError("baseline_step: state dimension mismatch");
  const ad::Var k1 = field(model, params, x, dropout);
  const ad::Var k2 = field(model, params, ad::add(x, ad::scale(k1, 0.5 * h)), dropout);
  const ad::Var k3 = field(model, params, ad::add(x, ad::scale(k2, 0.5 * h)), dropout);
  const ad::Var k4 = field(model, params, ad::add(x, ad::scale(k3, h)), dropout);
  ad::Var incr = ad::add(ad::add(k1, ad::scale(k2, 2.0)), ad::add(ad::scale(k3, 2.0), k4));
  return ad::add(x, ad::scale(incr, h / 6.0));
}

VectorXd baseline_step(const BaselineModel& model, const ParameterStore& params, const VectorXd& x, double h) {
  if (!x.allFinite()) throw DimensionError("baseline_step: state is not finite");
  ad::Tape tape;
  ParamSource src(tape, params, false);
  const VectorXd out = baseline_step_batch(model, src, tape.constant(x), h).value().col(0);
  if (!out.allFinite()) {
    throw SingularMatrixError("baseline_step: singular velocity Hessian near " +
                              describe(x.head(model.dim), x.tail(model.dim)));
  }
  return out;
}

BaselineBatch make_baseline_batch(const Dataset& data) {
  if (data.empty()) throw DimensionError("baseline: empty dataset");
  const Index d = data.front().dim();
  const double h = data.front().h;
  Index m = 0;
  for (const auto& t : data) {
    if (t.samples() < 3) throw DimensionError("baseline: trajectories need at least 3 samples");
    m += t.samples() - 2;
  }
  BaselineBatch b;
  b.h = h;
  b.from.resize(2 * d, m);
  b.to.resize(2 * d, m);
  Index c = 0;
  for (const auto& t : data) {
    for (Index n = 1; n + 1 < t.samples(); ++n, ++c) {
      b.from.col(c) << 0.5 * (t.q.col(n - 1) + t.q.col(n)), (t.q.col(n) - t.q.col(n - 1)) / h;
      b.to.col(c) << 0.5 * (t.q.col(n) + t.q.col(n + 1)), (t.q.col(n + 1) - t.q.col(n)) / h;
    }
  }
  return b;
}

ad::Var baseline_loss_batch(const BaselineModel& model, ParamSource& params, const BaselineBatch& batch,
                            DropoutState* dropout) {
  ad::Tape& tape = params.tape();
  const ad::Var pred = baseline_step_batch(model, params, tape.constant(batch.from), batch.h, dropout);
  const ad::Var diff = ad::sub(pred, tape.constant(batch.to));
  return ad::scale(ad::sum(ad::square(diff)), 1.0 / static_cast<double>(batch.from.cols()));
}

double baseline_loss(const BaselineModel& model, const ParameterStore& params, const Dataset& data) {
  const BaselineBatch b = make_baseline_batch(data);
  ad::Tape tape;
  ParamSource src(tape, params, false);
  return baseline_loss_batch(model, src, b).scalar();
}

TrainReport train_baseline(const TrainConfig& cfg, const Dataset& train_set, const Dataset& val_set,
                           const BaselineModel& model, ParameterStore& params) {
  auto tb = std::make_shared<BaselineBatch>(make_baseline_batch(train_set));
  auto vb = std::make_shared<BaselineBatch>(make_baseline_batch(val_set.empty() ? train_set : val_set));
  TrainProblem p;
  p.dropout_rate = model.kind == BaselineKind::Glnn ? model.glnn.force.dropout_rate() : 0.0;
  p.train_loss = [=](ParamSource& src, StepContext& ctx) { return baseline_loss_batch(model, src, *tb, ctx.dropout); };
  p.val_loss = [=](ParamSource& src, StepContext&) { return baseline_loss_batch(model, src, *vb); };
  return train_loop(params, p, cfg);
}

BaselineRollout baseline_rollout(const BaselineModel& model, const ParameterStore& params, const VectorXd& q0,
                                 const VectorXd& q1, int n, double h) {
  const int d = model.dim;
  if (q0.size() != d || q1.size() != d) throw DimensionError("baseline_rollout: dimension mismatch");
  if (n < 1) throw ConfigError("baseline_rollout: N must be >= 1");
  BaselineRollout r;
  r.q = MatrixXd::Constant(d, n + 1, std::numeric_limits<double>::quiet_NaN());
  r.q.col(0) = q0;
  r.q.col(1) = q1;
  VectorXd x(2 * d);
  x << 0.5 * (q0 + q1), (q1 - q0) / h;
  for (int k = 1; k < n; ++k) {
    try {
      x = baseline_step(model, params, x, h);
    } catch (const SingularMatrixError&) {
      r.failed = true;
      r.failed_step = k + 1;
      break;
    } catch (const DimensionError&) {
      r.failed = true;
      r.failed_step = k + 1;
      break;
    }
    r.q.col(k + 1) = x.head(d) + 0.5 * h * x.tail(d);
  }
  return r;
}

}  // namespace dlda
