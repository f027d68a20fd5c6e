#pragma once

#include "dlda/diff.hpp"
#include "dlda/mechanics.hpp"
#include "dlda/networks.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>

namespace dt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline VectorXd uniform(Eigen::Index n, dlda::Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline double rel_err(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).norm() / (b.norm() + 1e-8);
}

// Random GELU MLP R^in -> R with nonzero biases.
struct RandomMlp {
  dlda::ParameterStore store;
  dlda::Mlp net;

  RandomMlp(int in, std::uint64_t seed, int hidden = 30, int layers = 3) {
    net = dlda::Mlp::create(store, "f", {in, hidden, layers, 1});
    dlda::Rng rng(seed);
    dlda::init_params(net, store, rng);
    for (int l = 0; l < net.num_layers(); ++l) {
      auto b = store.view(net.bias_slice(l));
      b = uniform(b.rows(), rng, -0.3, 0.3);
    }
  }

  dlda::ScalarFunction fn() const {
    const dlda::Mlp n = net;
    return {n.spec().input_dim,
            [n](dlda::ParamSource& p, std::span<const dlda::ad::Jet> x) { return n.forward(p, dlda::ad::vcat(x)); }};
  }
};

// Central differences of a scalar function.
inline VectorXd fd_grad(const std::function<double(const VectorXd&)>& f, const VectorXd& x, double h = 1e-5) {
  VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    VectorXd a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

inline dlda::LagrangianModel harmonic(int d = 1) {
  return dlda::analytic_lagrangian(d, [d](dlda::JetSpan q, dlda::JetSpan v) {
    dlda::ad::Jet l = 0.5 * square(v[0]) - 0.5 * square(q[0]);
    for (int i = 1; i < d; ++i) l = l + 0.5 * square(v[static_cast<std::size_t>(i)]) - 0.5 * square(q[static_cast<std::size_t>(i)]);
    return l;
  });
}

inline dlda::LagrangianModel free_particle(int d = 1) {
  return dlda::analytic_lagrangian(d, [d](dlda::JetSpan, dlda::JetSpan v) {
    dlda::ad::Jet l = 0.5 * square(v[0]);
    for (int i = 1; i < d; ++i) l = l + 0.5 * square(v[static_cast<std::size_t>(i)]);
    return l;
  });
}

inline dlda::LagrangianModel pendulum() {
  return dlda::analytic_lagrangian(1, [](dlda::JetSpan q, dlda::JetSpan v) { return 0.5 * square(v[0]) + cos(q[0]); });
}

// F = -gamma v
inline dlda::ForceModel linear_damping(int d, double gamma) {
  return dlda::analytic_force(d, [gamma](dlda::JetSpan, dlda::JetSpan v) {
    std::vector<dlda::ad::Jet> f;
    for (const auto& vi : v) f.push_back(-gamma * vi);
    return f;
  });
}

}  // namespace dt
