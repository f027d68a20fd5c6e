#include "support.hpp"

#include "dlda/data.hpp"
#include "dlda/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace dlda;
using dt::vec;

namespace {

double speed(const Eigen::VectorXd& s) { return s.tail(3).norm(); }

Eigen::VectorXd state_at(const Trajectory& t, Eigen::Index k) {
  Eigen::VectorXd s(t.q.rows() + t.v.rows());
  s << t.q.col(k), t.v.col(k);
  return s;
}

}  // namespace

TEST_CASE("double pendulum at rest stays at rest") {
  CHECK(dp_ode(Eigen::VectorXd::Zero(4), DoublePendulumParams{}).isZero(0.0));
}

TEST_CASE("undamped double pendulum conserves energy, damped one loses it") {
  DoublePendulumParams p;
  p.b1 = p.b2 = 0.0;
  const Eigen::VectorXd x0 = vec({0.4, -0.3, 0.0, 0.0});
  const Ode f = [&](const Eigen::VectorXd& s) { return dp_ode(s, p); };
  const Trajectory t = integrate(f, x0, 0.1, 100, 20, 2);
  const double e0 = dp_energy(x0, p);
  double drift = 0;
  for (Eigen::Index k = 0; k < t.samples(); ++k) drift = std::max(drift, std::abs(dp_energy(state_at(t, k), p) - e0));
  CHECK(drift < 1e-8);

  DoublePendulumParams damped;
  const Ode g = [&](const Eigen::VectorXd& s) { return dp_ode(s, damped); };
  const Trajectory u = integrate(g, x0, 0.1, 100, 50, 2);
  bool decreasing = true;
  for (Eigen::Index k = 1; k < u.samples(); ++k)
    decreasing = decreasing && dp_energy(state_at(u, k), damped) < dp_energy(state_at(u, k - 1), damped);
  CHECK(decreasing);
}

TEST_CASE("charged particle") {
  ChargedParticleParams p;
  p.damping = 0.0;
  const Eigen::VectorXd d = cp_ode(vec({0, 0, 0, 1, 0, 0}), p);
  CHECK(d.head(3).isApprox(vec({1, 0, 0})));
  CHECK(d.tail(3).isApprox(vec({0, -1, 0})));

  const Eigen::VectorXd x0 = vec({0.1, 0.2, 0.3, 0.7, -0.4, 0.2});
  const Trajectory t = integrate([&](const Eigen::VectorXd& s) { return cp_ode(s, p); }, x0, 0.1, 100, 40, 3);
  for (Eigen::Index k = 0; k < t.samples(); ++k) REQUIRE(speed(state_at(t, k)) == doctest::Approx(speed(x0)).epsilon(1e-10));

  ChargedParticleParams decay;
  decay.field.setZero();
  decay.damping = 0.3;
  decay.mass = 2.0;
  const Trajectory u = integrate([&](const Eigen::VectorXd& s) { return cp_ode(s, decay); }, x0, 0.1, 100, 30, 3);
  for (Eigen::Index k = 0; k < u.samples(); ++k)
    REQUIRE(speed(state_at(u, k)) == doctest::Approx(speed(x0) * std::exp(-0.3 * 0.1 * k / 2.0)).epsilon(1e-10));

  ChargedParticleParams both;
  const Trajectory w = integrate([&](const Eigen::VectorXd& s) { return cp_ode(s, both); }, x0, 0.1, 100, 30, 3);
  bool monotone = true;
  for (Eigen::Index k = 1; k < w.samples(); ++k) monotone = monotone && speed(state_at(w, k)) <= speed(state_at(w, k - 1));
  CHECK(monotone);
}

TEST_CASE("integrator") {
  const Trajectory c = integrate([](const Eigen::VectorXd& s) { return Eigen::VectorXd::Zero(s.size()); }, vec({1, 2}), 0.1,
                                 10, 5, 1);
  CHECK((c.q.array() == 1.0).all());
  CHECK(c.samples() == 6);

  // q' = q, stored as a (position, unused) pair
  const Ode grow = [](const Eigen::VectorXd& s) { return vec({s(0), 0.0}); };
  const Trajectory e = integrate(grow, vec({1, 0}), 0.1, 100, 10, 1);
  CHECK(std::abs(e.q(0, 10) / std::exp(1.0) - 1) < 1e-10);

  const double e1 = std::abs(integrate(grow, vec({1, 0}), 0.1, 1, 10, 1).q(0, 10) - std::exp(1.0));
  const double e2 = std::abs(integrate(grow, vec({1, 0}), 0.1, 2, 10, 1).q(0, 10) - std::exp(1.0));
  CHECK(e1 / e2 == doctest::Approx(16).epsilon(0.1));

  CHECK_THROWS_AS(integrate(grow, vec({1, 0}), 0.1, 0, 10, 1), ConfigError);
}

TEST_CASE("noise") {
  Trajectory t;
  t.q = Eigen::MatrixXd::Zero(4, 250000);
  Rng a(1), b(1);
  CHECK(add_noise(t, 0.0, a).q == t.q);
  Rng other(2);
  const Trajectory n1 = add_noise(t, 0.05, other);
  const Trajectory n2 = add_noise(t, 0.05, b);
  Rng c(1);
  CHECK(add_noise(t, 0.05, c).q == n2.q);
  const double var = n2.q.squaredNorm() / static_cast<double>(n2.q.size());
  CHECK(std::abs(var / 0.0025 - 1) < 0.01);
  CHECK_FALSE(n1.q.isApprox(n2.q));
  CHECK(default_noise_sigma(0.1) == doctest::Approx(std::sqrt(1e-3)));
}

TEST_CASE("Savitzky-Golay") {
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(40, -1, 1);
  const Eigen::VectorXd cubic = 0.5 - t.array() + 2 * t.array().square() - 3 * t.array().cube();
  CHECK((savgol_smooth(cubic, 11, 3) - cubic).lpNorm<Eigen::Infinity>() < 1e-10);
  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(20, 2.5);
  CHECK((savgol_smooth(flat, 5, 2) - flat).lpNorm<Eigen::Infinity>() < 1e-12);

  Rng rng(4);
  std::normal_distribution<double> n(0, 0.1);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(200, 0, 10);
  const Eigen::VectorXd clean = x.array().sin();
  Eigen::VectorXd noisy = clean;
  for (auto& v : noisy) v += n(rng);
  const Eigen::VectorXd smooth = savgol_smooth(noisy, 11, 3);
  CHECK((smooth - clean).norm() < (noisy - clean).norm());

  CHECK_THROWS_AS(savgol_smooth(flat, 4, 2), ConfigError);
  CHECK_THROWS_AS(savgol_smooth(flat, 5, 5), ConfigError);

  Trajectory tr;
  tr.q.resize(2, 40);
  tr.q.row(0) = cubic.transpose();
  tr.q.row(1) = cubic.transpose() * 2;
  CHECK((savgol_smooth(tr, 7, 3).q - tr.q).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("renderer") {
  const Eigen::VectorXd up = render_pendulum(0.0);
  CHECK(up.size() == kFrameSize);
  CHECK((up.array() >= 0).all());
  CHECK((up.array() <= 1).all());
  CHECK(up.sum() > 50);
  for (int r = 0; r < kFrameHeight; ++r)
    for (int c = 0; c < kFrameWidth; ++c)
      if (c < 10 || c > 19) REQUIRE(up(r * kFrameWidth + c) == 0.0);

  for (double th : {0.1, 0.3, 0.52}) {
    const Eigen::VectorXd a = render_pendulum(th), b = render_pendulum(-th);
    for (int r = 0; r < kFrameHeight; ++r)
      for (int c = 0; c < kFrameWidth; ++c) REQUIRE(a(r * kFrameWidth + c) == doctest::Approx(b(r * kFrameWidth + kFrameWidth - 1 - c)));
  }

  // continuity: the L1 change shrinks in proportion to the angle step, so
  // there are no jumps between neighbouring frames
  auto worst = [](double step) {
    double w = 0;
    for (double th = -0.6; th < 0.6; th += 0.01) w = std::max(w, (render_pendulum(th) - render_pendulum(th + step)).lpNorm<1>());
    return w;
  };
  const double w3 = worst(1e-3), w4 = worst(1e-4);
  CHECK(w3 < 2.0);
  CHECK(w4 < 0.15 * w3);
  CHECK((render_pendulum(0.3) - render_pendulum(0.0)).lpNorm<1>() > 20);
}

TEST_CASE("generators are deterministic and sized") {
  GenSpec g;
  g.trajectories = 3;
  g.steps = 12;
  g.noise_sigma = 0.01;
  Rng a(5), b(5);
  const Dataset x = generate_double_pendulum(g, {}, a), y = generate_double_pendulum(g, {}, b);
  REQUIRE(x.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(x[i].q == y[i].q);
    CHECK(x[i].q.rows() == 2);
    CHECK(x[i].samples() == 13);
    CHECK(x[i].h == 0.1);
  }
  Rng c(6), d(6);
  CHECK(generate_charged_particle(g, {}, c)[2].q == generate_charged_particle(g, {}, d)[2].q);
  Rng e(6), f(6);
  CHECK(generate_pendulum(g, {}, e)[1].q == generate_pendulum(g, {}, f)[1].q);
  Rng h(6), k(6);
  CHECK(generate_oscillator(g, {}, h)[0].q == generate_oscillator(g, {}, k)[0].q);

  GenSpec clean = g;
  clean.noise_sigma = 0;
  Rng r(1);
  for (const auto& t : generate_double_pendulum(clean, {}, r, 0.5)) {
    CHECK(std::abs(t.q(0, 0)) <= 0.5);
    CHECK(std::abs(t.q(1, 0)) <= 0.5);
  }
  Rng s(1);
  const Trajectory frames = render_frames(generate_pendulum(clean, {}, s)[0]);
  CHECK(frames.q.rows() == kFrameSize);
  CHECK(frames.samples() == 13);

  GenSpec bad = g;
  bad.steps = 0;
  CHECK_THROWS_AS(generate_oscillator(bad, {}, s), ConfigError);
}
