#include "support.hpp"

#include "dlda/error.hpp"
#include "dlda/networks.hpp"
#include "dlda/training.hpp"

#include <doctest.h>

#include <cmath>

using namespace dlda;
using dt::vec;

TEST_CASE("gelu values and asymptotes") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(std::abs(gelu(10.0) - 10.0) < 1e-6);
  CHECK(std::abs(gelu(-10.0)) < 1e-6);
  // x Phi(x) at x = 1
  CHECK(gelu(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-15));
}

TEST_CASE("gelu is monotone on each side of its minimum") {
  // the minimum sits near x = -0.7518, so [-5, 5] as a whole is not monotone
  bool up = true, down = true;
  double prev = gelu(-5.0);
  for (int i = 1; i <= 10000; ++i) {
    const double x = -5.0 + 1e-3 * i;
    const double y = gelu(x);
    if (x <= -0.752) down = down && y <= prev;
    if (x >= -0.751) up = up && y >= prev;
    prev = y;
  }
  CHECK(down);
  CHECK(up);
  CHECK(gelu(-0.7518) < gelu(-5.0));
}

TEST_CASE("zero MLP outputs zero") {
  ParameterStore st;
  const Mlp m = Mlp::create(st, "m", {3, 8, 2, 2});
  Rng rng(1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 5);
  CHECK(m.forward(st, x).isZero(0.0));
}

TEST_CASE("one-neuron chain by hand") {
  ParameterStore st;
  const Mlp m = Mlp::create(st, "m", {1, 1, 1, 1});
  st.view(m.weight_slice(0))(0, 0) = 1.0;
  st.view(m.weight_slice(1))(0, 0) = 2.0;
  st.view(m.bias_slice(1))(0, 0) = 0.5;
  Eigen::MatrixXd x(1, 2);
  x << 1.0, -2.0;
  const Eigen::MatrixXd y = m.forward(st, x);
  CHECK(y(0, 0) == doctest::Approx(2.0 * gelu(1.0) + 0.5).epsilon(1e-15));
  CHECK(y(0, 1) == doctest::Approx(2.0 * gelu(-2.0) + 0.5).epsilon(1e-15));
}

TEST_CASE("forward is deterministic and agrees with the jet path") {
  dt::RandomMlp a(4, 9), b(4, 9);
  CHECK(a.store == b.store);
  const Eigen::VectorXd x = vec({0.2, 0.1, -0.7, 0.3});
  const Eigen::MatrixXd ya = a.net.forward(a.store, Eigen::MatrixXd(x));
  CHECK(ya == b.net.forward(b.store, Eigen::MatrixXd(x)));
  CHECK(evaluate(a.fn(), a.store, x, {}).value == doctest::Approx(ya(0, 0)).epsilon(1e-14));
}

TEST_CASE("MLP input gradients match differences at random points") {
  dt::RandomMlp m(3, 4);
  Rng rng(8);
  const auto f = m.fn();
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd x = dt::uniform(3, rng, -2, 2);
    const auto fd = dt::fd_grad([&](const Eigen::VectorXd& y) { return evaluate(f, m.store, y, {}).value; }, x);
    REQUIRE(dt::rel_err(eval_with_input_grad(f, m.store, x).grad, fd) < 1e-5);
  }
}

TEST_CASE("dropout") {
  const Eigen::MatrixXd h = Eigen::MatrixXd::Constant(4, 3, 2.5);
  DropoutState off{0.0, Rng(1), true};
  CHECK(dropout_forward(h, off) == h);
  DropoutState eval{0.5, Rng(1), false};
  CHECK(dropout_forward(h, eval) == h);

  DropoutState on{0.5, Rng(3), true};
  const Eigen::MatrixXd big = Eigen::MatrixXd::Constant(1, 100000, 2.0);
  const Eigen::MatrixXd y = dropout_forward(big, on);
  CHECK(std::abs(y.mean() - 2.0) < 0.02);
  CHECK(((y.array() == 0.0) || (y.array() == 4.0)).all());
}

TEST_CASE("Glorot init: zero biases, variance, determinism") {
  ParameterStore st;
  const Mlp m = Mlp::create(st, "m", {60, 40, 1, 1});
  Rng rng(2);
  init_params(m, st, rng);
  for (int l = 0; l < m.num_layers(); ++l) CHECK(st.view(m.bias_slice(l)).isZero(0.0));
  // 60 x 40 = 2400 draws per matrix; pool several inits to 10^4
  double s2 = 0.0;
  long n = 0;
  for (int rep = 0; rep < 5; ++rep) {
    init_params(m, st, rng);
    const auto w = st.view(m.weight_slice(0));
    s2 += w.squaredNorm();
    n += w.size();
  }
  const double var = s2 / static_cast<double>(n);
  CHECK(std::abs(var / (2.0 / 100.0) - 1.0) < 0.1);

  ParameterStore a = st, b = st;
  Rng r1(42), r2(42);
  init_params(m, a, r1);
  init_params(m, b, r2);
  CHECK(a == b);
}

TEST_CASE("bad specs are rejected") {
  CHECK_THROWS_AS(MlpSpec({0, 3, 1, 1}).validate(), ConfigError);
  CHECK_THROWS_AS(MlpSpec({1, 0, 1, 1}).validate(), ConfigError);
  CHECK_THROWS_AS(MlpSpec({1, 3, -1, 1}).validate(), ConfigError);
}

TEST_CASE("autoencoder with l = d learns the identity") {
  // gelu(x) - gelu(-x) = x, so [I; -I] then [I, -I] is an exact identity;
  // start from a perturbed copy of it
  ParameterStore st;
  AutoencoderSpec spec{4, 4, 8, 1};
  const Autoencoder ae = Autoencoder::create(st, "ae", spec);
  Rng rng(3);
  ae.init(st, rng);
  Eigen::MatrixXd in(8, 4), out(4, 8);
  in << Eigen::MatrixXd::Identity(4, 4), -Eigen::MatrixXd::Identity(4, 4);
  out << Eigen::MatrixXd::Identity(4, 4), -Eigen::MatrixXd::Identity(4, 4);
  for (const Mlp* m : {&ae.encoder, &ae.decoder}) {
    st.view(m->weight_slice(0)) = in + 0.1 * st.view(m->weight_slice(0));
    st.view(m->weight_slice(1)) = out + 0.1 * st.view(m->weight_slice(1));
  }
  const Eigen::MatrixXd x = 0.5 * Eigen::MatrixXd::Random(4, 100);
  const auto mse = [&] { return (ae.decode(st, ae.encode(st, x)) - x).squaredNorm() / static_cast<double>(x.size()); };
  const double before = mse();
  TrainConfig cfg;
  AdamState state;
  for (int it = 0; it < 2000; ++it) {
    const auto r = eval_param_grad(
        [&](ParamSource& p) {
          const ad::Jet xin(p.tape().constant(x), 0, 0);
          const ad::Jet y = ae.decoder.forward(p, ae.encoder.forward(p, xin));
          return ad::scale(ad::sum(ad::square(ad::sub(y.value(), xin.value()))), 1.0 / static_cast<double>(x.size()));
        },
        st);
    adam_step(st, r.grad, state, cfg);
  }
  CHECK(before > 1e-4);
  CHECK(mse() < 1e-6);
}
