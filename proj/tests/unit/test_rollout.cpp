#include "support.hpp"

#include "dlda/error.hpp"
#include "dlda/rollout.hpp"

#include <doctest.h>

#include <cmath>

using namespace dlda;
using dt::vec;

namespace {

// L = 1/2 v^T A v - 1/2 q^T B q
LagrangianModel quadratic(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const auto d = static_cast<int>(a.rows());
  return analytic_lagrangian(d, [a, b, d](JetSpan q, JetSpan v) {
    ad::Jet l = 0.0 * v[0];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const auto si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
        l = l + (0.5 * a(i, j)) * (v[si] * v[sj]) - (0.5 * b(i, j)) * (q[si] * q[sj]);
      }
    return l;
  });
}

Eigen::MatrixXd spd(int d, Rng& rng) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::NullaryExpr(d, d, [&] { return dt::uniform(1, rng)(0); });
  return m * m.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
}

}  // namespace

TEST_CASE("implicit step: harmonic hand case") {
  ParameterStore st;
  const auto s = implicit_step_info(dt::harmonic(), zero_force(1), st, vec({1}), vec({1}), 1.0);
  CHECK(std::abs(s.q(0) - 0.2) < 1e-12);
  CHECK(s.residual_norm <= NewtonConfig{}.tol);
}

TEST_CASE("implicit step: 5/9 for the hand case" * doctest::should_fail()) {
  ParameterStore st;
  CHECK(std::abs(implicit_step(dt::harmonic(), zero_force(1), st, vec({1}), vec({1}), Scheme::midpoint(1.0))(0) - 5.0 / 9.0) <
        1e-12);
}

TEST_CASE("implicit step: uniform motion") {
  ParameterStore st;
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd a = dt::uniform(3, rng, -5, 5), b = dt::uniform(3, rng, -5, 5);
    REQUIRE((implicit_step(dt::free_particle(3), zero_force(3), st, a, b, Scheme::midpoint(0.1)) - (2 * b - a)).norm() <
            1e-12);
  }
}

TEST_CASE("implicit step: linear damping") {
  // (2/h)(1 - w) - g (1 + w) = 0 for the unknown velocity w
  const double h = 0.1, g = 0.1;
  ParameterStore st;
  const double x = implicit_step(dt::free_particle(), dt::linear_damping(1, g), st, vec({0}), vec({0.1}), Scheme::midpoint(h))(0);
  const double w = (2 / h - g) / (2 / h + g);
  CHECK(std::abs(x - (0.1 + h * w)) < 1e-12);
}

TEST_CASE("implicit step matches the closed-form linear solve for quadratic L") {
  ParameterStore st;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const int d = 1 + static_cast<int>(seed % 3);
    const Eigen::MatrixXd a = spd(d, rng), b = spd(d, rng);
    const double h = dt::uniform(1, rng, 0.05, 1.0)(0);
    const Eigen::VectorXd q0 = dt::uniform(d, rng), q1 = dt::uniform(d, rng);
    const Eigen::MatrixXd lhs = 0.5 * b + (2 / (h * h)) * a;
    const Eigen::VectorXd rhs = -0.5 * b * (q0 + 2 * q1) + (2 / (h * h)) * a * (2 * q1 - q0);
    const Eigen::VectorXd expect = lhs.partialPivLu().solve(rhs);
    const auto s = implicit_step_info(quadratic(a, b), zero_force(d), st, q0, q1, h);
    REQUIRE((s.q - expect).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("implicit step argument checks") {
  ParameterStore st;
  CHECK_THROWS_AS(implicit_step(dt::harmonic(), zero_force(1), st, vec({1}), vec({1}), Scheme::multistep(2, 0.1)), ConfigError);
  CHECK_THROWS_AS(implicit_step(dt::harmonic(), zero_force(1), st, vec({1, 2}), vec({1}), Scheme::midpoint(0.1)),
                  DimensionError);
  NewtonConfig bad;
  bad.tol = 0;
  CHECK_THROWS_AS(implicit_step_info(dt::harmonic(), zero_force(1), st, vec({1}), vec({1}), 0.1, bad), ConfigError);
}

TEST_CASE("rollout basics") {
  ParameterStore st;
  const auto r1 = rollout(dt::pendulum(), zero_force(1), st, vec({0.3}), vec({0.31}), 1, true, Scheme::midpoint(0.1));
  CHECK(r1.q.cols() == 2);
  CHECK(r1.q(0, 0) == 0.3);
  CHECK(r1.q(0, 1) == 0.31);
  CHECK(r1.iterations.empty());

  const auto on = rollout(dt::pendulum(), zero_force(1), st, vec({0.3}), vec({0.31}), 50, true, Scheme::midpoint(0.1));
  const auto off = rollout(dt::pendulum(), zero_force(1), st, vec({0.3}), vec({0.31}), 50, false, Scheme::midpoint(0.1));
  CHECK(on.q == off.q);
  for (double r : on.residual_norms) CHECK(r <= NewtonConfig{}.tol);

  // a damping model only matters with the force on
  const auto damped = rollout(dt::pendulum(), dt::linear_damping(1, 0.5), st, vec({0.3}), vec({0.31}), 50, false,
                              Scheme::midpoint(0.1));
  CHECK(damped.q == off.q);
  CHECK_THROWS_AS(rollout(dt::pendulum(), zero_force(1), st, vec({0.3}), vec({0.31}), 0, true, Scheme::midpoint(0.1)),
                  ConfigError);
}

TEST_CASE("rollout reports the failing step") {
  ParameterStore st;
  NewtonConfig cfg;
  cfg.max_iters = 1;
  cfg.tol = 1e-15;
  cfg.stall_tol = 1e-15;
  try {
    rollout(dt::pendulum(), zero_force(1), st, vec({2.5}), vec({2.0}), 10, true, Scheme::midpoint(0.5), cfg);
    FAIL("expected a rollout failure");
  } catch (const RolloutError& e) {
    CHECK(e.step() == 2);
    CHECK(e.partial().q(0, 1) == 2.0);
    CHECK(std::isnan(e.partial().q(0, 2)));
    CHECK(e.partial().converged.back() == false);
  }
}

TEST_CASE("midpoint rollout keeps the pendulum energy bounded, forward Euler does not") {
  ParameterStore st;
  const double h = 0.1;
  const int n = 10000;
  const auto r = rollout(dt::pendulum(), zero_force(1), st, vec({1.0}), vec({1.0}), n, true, Scheme::midpoint(h));
  double e0 = 0, lo = 1e300, hi = -1e300;
  for (int k = 0; k < n; ++k) {
    const auto [qb, vb] = midpoint_pair(r.q.col(k), r.q.col(k + 1), h);
    const double e = energy(dt::pendulum(), st, qb, vb);
    if (k == 0) e0 = e;
    lo = std::min(lo, e - e0);
    hi = std::max(hi, e - e0);
  }
  CHECK(hi - lo < 5e-3);
  // explicit Euler on the same system
  double q = 1.0, v = 0.0, drift = 0.0;
  const double ee0 = 0.5 * v * v - std::cos(q);
  for (int k = 0; k < n; ++k) {
    const double a = -std::sin(q);
    q += h * v;
    v += h * a;
    drift = std::max(drift, std::abs(0.5 * v * v - std::cos(q) - ee0));
  }
  CHECK(drift > 0.1);
}

TEST_CASE("energy of known Lagrangians") {
  ParameterStore st;
  CHECK(energy(dt::harmonic(), st, vec({0.5}), vec({2})) == doctest::Approx(0.5 * 4 + 0.5 * 0.25));
  CHECK(energy(dt::pendulum(), st, vec({0.0}), vec({1})) == doctest::Approx(0.5 - 1.0));
}

TEST_CASE("extrapolation error") {
  const Eigen::MatrixXd t0 = Eigen::MatrixXd::Zero(1, 5);
  Eigen::MatrixXd p0 = t0, p1 = t0;
  CHECK(extrapolation_error({t0}, {t0}, 3) == 0.0);
  p0(0, 3) = 0.1;
  CHECK(extrapolation_error({p0}, {t0}, 3) == doctest::Approx(0.01));
  p1(0, 3) = -0.3;
  CHECK(extrapolation_error({p0, p1}, {t0, t0}, 3) == doctest::Approx(0.05));
  CHECK_THROWS_AS(extrapolation_error({p0}, {t0}, 5), DimensionError);
  CHECK_THROWS_AS(extrapolation_error({p0}, {t0, t0}, 1), DimensionError);
}
