#include "support.hpp"

#include "dlda/baselines.hpp"
#include "dlda/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace dlda;
using dt::vec;

namespace {

Trajectory traj(const Eigen::MatrixXd& q, double h) {
  Trajectory t;
  t.h = h;
  t.q = q;
  return t;
}

}  // namespace

TEST_CASE("GLNN acceleration by hand") {
  ParameterStore st;
  CHECK(glnn_accel(dt::harmonic(2), zero_force(2), st, vec({0.3, -1}), vec({2, 1})).isApprox(vec({-0.3, 1})));
  CHECK(glnn_accel(dt::free_particle(), dt::linear_damping(1, 0.1), st, vec({4}), vec({2}))(0) == doctest::Approx(-0.2));
  // L = 1/2 m v^2 - q^4 with m = 2
  const auto quartic = analytic_lagrangian(1, [](JetSpan q, JetSpan v) { return square(v[0]) - square(square(q[0])); });
  CHECK(glnn_accel(quartic, zero_force(1), st, vec({0.7}), vec({0.1}))(0) == doctest::Approx(-2 * std::pow(0.7, 3)));
}

TEST_CASE("GLNN on M = eps I: accel = (-grad U + F) / (2 eps)") {
  ParameterStore st;
  LagrangianConfig lc;
  lc.epsilon = 0.5;
  lc.hidden_dim = 8;
  ForceConfig fc;
  const auto l = create_lagrangian(st, 2, lc);
  const auto f = create_force(st, 2, fc);
  Rng rng(4);
  init_lagrangian(l, st, rng);
  init_force(f, st, rng);
  const auto& m = std::get<MechanicalLagrangian>(l.impl);
  for (int i = 0; i < m.lambda_net.num_layers(); ++i) {
    st.view(m.lambda_net.weight_slice(i)).setZero();
    st.view(m.lambda_net.bias_slice(i)).setZero();
  }
  st.view(std::get<LinearRayleighForce>(f.impl).factor_slice) << 0.8, 0.3, -0.5;
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd q = dt::uniform(2, rng), v = dt::uniform(2, rng);
    // U = -L at v = 0
    const Eigen::VectorXd grad_u =
        -dt::fd_grad([&](const Eigen::VectorXd& y) { return lagrangian_eval(l, st, y, Eigen::VectorXd::Zero(2)); }, q);
    const Eigen::VectorXd expect = (-grad_u + force_eval(f, st, q, v)) / (2 * 0.5);
    REQUIRE((glnn_accel(l, f, st, q, v) - expect).norm() < 1e-8);
  }
}

TEST_CASE("GLNN singular Hessian") {
  ParameterStore st;
  const auto degenerate = analytic_lagrangian(1, [](JetSpan q, JetSpan v) { return q[0] * v[0] - square(q[0]); });
  CHECK_THROWS_AS(glnn_accel(degenerate, zero_force(1), st, vec({0.5}), vec({1})), SingularMatrixError);
  const auto model = BaselineModel::make_glnn({degenerate, zero_force(1)});
  const auto r = baseline_rollout(model, st, vec({0}), vec({0.1}), 5, 0.1);
  CHECK(r.failed);
  CHECK(r.failed_step == 2);
  CHECK(std::isnan(r.q(0, 2)));
  CHECK(std::isnan(r.q(0, 5)));
}

TEST_CASE("neural ODE with a zero field is the identity step") {
  ParameterStore st;
  const auto node = BaselineModel::create_node(st, 2, 8, 2);
  const Eigen::VectorXd x = vec({0.1, 0.2, 0.3, 0.4});
  CHECK(baseline_step(node, st, x, 0.1) == x);
}

TEST_CASE("GLNN RK4 step on the harmonic oscillator") {
  ParameterStore st;
  const auto m = BaselineModel::make_glnn({dt::harmonic(), zero_force(1)});
  const double h = 0.1;
  const Eigen::VectorXd x = baseline_step(m, st, vec({1, 0}), h);
  CHECK(std::abs(x(0) - std::cos(h)) < 1e-6);
  CHECK(std::abs(x(1) + std::sin(h)) < 1e-6);
}

TEST_CASE("baseline rollout composes steps and recovers positions") {
  ParameterStore st;
  const auto m = BaselineModel::make_glnn({dt::pendulum(), zero_force(1)});
  const double h = 0.1;
  const auto r = baseline_rollout(m, st, vec({0.2}), vec({0.25}), 3, h);
  Eigen::VectorXd x = vec({0.225, 0.5});
  x = baseline_step(m, st, x, h);
  CHECK(r.q(0, 2) == doctest::Approx(x(0) + 0.5 * h * x(1)).epsilon(1e-15));
  x = baseline_step(m, st, x, h);
  CHECK(r.q(0, 3) == doctest::Approx(x(0) + 0.5 * h * x(1)).epsilon(1e-15));

  // uniform motion is integrated exactly, so recovery is exact
  const auto free = BaselineModel::make_glnn({dt::free_particle(), zero_force(1)});
  const auto u = baseline_rollout(free, st, vec({0}), vec({0.1}), 20, h);
  for (int k = 0; k <= 20; ++k) CHECK(std::abs(u.q(0, k) - 0.1 * k) < 1e-12);
}

TEST_CASE("baseline loss") {
  ParameterStore st;
  const auto node = BaselineModel::create_node(st, 1, 4, 1);
  CHECK(baseline_loss(node, st, {traj(Eigen::MatrixXd::Constant(1, 6, 0.4), 0.1)}) == 0.0);
  const double a = std::sqrt(0.032);
  const Dataset one{traj(dt::vec({0, 0, a}).transpose(), 1.0)};
  CHECK(baseline_loss(node, st, one) == doctest::Approx(0.04));

  Rng rng(3);
  Dataset many;
  for (int i = 0; i < 4; ++i) many.push_back(traj(dt::uniform(7, rng).transpose(), 0.1));
  Dataset rev(many.rbegin(), many.rend());
  CHECK(baseline_loss(node, st, many) == doctest::Approx(baseline_loss(node, st, rev)).epsilon(1e-14));
}

TEST_CASE("batched GLNN acceleration agrees with the single-point version") {
  ParameterStore st;
  LagrangianConfig lc;
  ForceConfig fc;
  fc.kind = ForceKind::Rayleigh;
  const auto l = create_lagrangian(st, 2, lc);
  const auto f = create_force(st, 2, fc);
  Rng rng(8);
  init_lagrangian(l, st, rng);
  init_force(f, st, rng);
  const Eigen::MatrixXd q = Eigen::MatrixXd::Random(2, 6), v = Eigen::MatrixXd::Random(2, 6);
  ad::Tape tape;
  ParamSource src(tape, st, false);
  const Eigen::MatrixXd a = glnn_accel_batch(l, f, src, tape.constant(q), tape.constant(v)).value();
  for (int i = 0; i < 6; ++i) CHECK((a.col(i) - glnn_accel(l, f, st, q.col(i), v.col(i))).norm() < 1e-10);
}

TEST_CASE("baseline training smoke") {
  ParameterStore st;
  const auto node = BaselineModel::create_node(st, 1, 16, 2);
  Rng rng(2);
  init_params(node.field, st, rng);
  Dataset data;
  for (int i = 0; i < 4; ++i) {
    Eigen::MatrixXd q(1, 15);
    for (int k = 0; k < 15; ++k) q(0, k) = std::cos(0.1 * k + i);
    data.push_back(traj(q, 0.1));
  }
  const double before = baseline_loss(node, st, data);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.lr = 3e-3;
  const auto rep = train_baseline(cfg, data, {}, node, st);
  CHECK(rep.epochs.size() == 200);
  CHECK(baseline_loss(node, st, data) < before);
}
