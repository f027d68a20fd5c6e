// Acceptance suite: one PASS/FAIL line per criterion.
// DLDA_ACCEPT_ONLY=1,4,7 runs a subset.

#include "dlda/baselines.hpp"
#include "dlda/checkpoint.hpp"
#include "dlda/config.hpp"
#include "dlda/data.hpp"
#include "dlda/diff.hpp"
#include "dlda/discretization.hpp"
#include "dlda/experiment.hpp"
#include "dlda/rollout.hpp"
#include "dlda/trajectory_io.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace dlda;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

VectorXd uniform(Eigen::Index n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

double rel_err(const MatrixXd& a, const MatrixXd& b) { return (a - b).norm() / (b.norm() + 1e-8); }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dlda_accept_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1: derivatives ------------------------------------------------------

Outcome derivatives() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_grad = 0, worst_hess = 0, worst_param = 0, worst_nested = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ParameterStore st;
    const Mlp net = Mlp::create(st, "f", {4, 30, 3, 1});
    Rng rng(seed);
    init_params(net, st, rng);
    for (int l = 0; l < net.num_layers(); ++l) {
      auto b = st.view(net.bias_slice(l));
      b = uniform(b.rows(), rng, -0.3, 0.3);
    }
    const ScalarFunction f{4, [net](ParamSource& p, std::span<const ad::Jet> x) { return net.forward(p, ad::vcat(x)); }};
    const VectorXd x = uniform(4, rng);
    const double e = 1e-5;

    const DiffResult r = evaluate(f, st, x, {true, true, true, true});
    VectorXd fd(4);
    MatrixXd fdh(4, 4);
    for (int i = 0; i < 4; ++i) {
      VectorXd a = x, b = x;
      a(i) += e;
      b(i) -= e;
      fd(i) = (evaluate(f, st, a, {}).value - evaluate(f, st, b, {}).value) / (2 * e);
      fdh.row(i) = (eval_with_input_grad(f, st, a).grad - eval_with_input_grad(f, st, b).grad).transpose() / (2 * e);
    }
    worst_grad = std::max(worst_grad, rel_err(r.input_grad, fd));
    worst_hess = std::max(worst_hess, rel_err(r.input_hessian, fdh));

    // parameter gradients along random directions of the whole store
    const Objective nested = [&](ParamSource& p) {
      const int dirs[] = {-1, -1, 0, 1};
      const auto in = seed_rows(p.tape(), MatrixXd(x), dirs, 2, 1);
      const ad::Jet l = net.forward(p, ad::vcat(in));
      return ad::sum(ad::add(ad::square(l.d1(0)), ad::square(l.d1(1))));
    };
    const VectorXd gn = eval_param_grad(nested, st).grad;
    VectorXd dir_ad(3), dir_fd(3), nest_ad(3), nest_fd(3);
    for (int j = 0; j < 3; ++j) {
      const VectorXd u = uniform(static_cast<Eigen::Index>(st.size()), rng);
      ParameterStore a = st, b = st;
      a.flat() += e * u;
      b.flat() -= e * u;
      dir_ad(j) = r.param_grad.dot(u);
      dir_fd(j) = (evaluate(f, a, x, {}).value - evaluate(f, b, x, {}).value) / (2 * e);
      nest_ad(j) = gn.dot(u);
      nest_fd(j) = (eval_param_grad(nested, a).value - eval_param_grad(nested, b).value) / (2 * e);
    }
    worst_param = std::max(worst_param, rel_err(dir_ad, dir_fd));
    worst_nested = std::max(worst_nested, rel_err(nest_ad, nest_fd));
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst_grad < 1e-5 && worst_param < 1e-5 && worst_hess < 1e-4 && worst_nested < 1e-4 && secs < 10.0;
  o.detail = "grad " + fmt(worst_grad) + ", param grad " + fmt(worst_param) + ", hessian " + fmt(worst_hess) +
             ", nested " + fmt(worst_nested) + ", " + fmt(secs) + " s";
  return o;
}

// ---- 2: stencils -----------------------------------------------------------

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome stencils() {
  const Stencil s2 = multistep_coeffs(2);
  const double q4[] = {-1.0 / 12, 8.0 / 12, 0.0, 4.0 / 12, 1.0 / 12};
  const double v4[] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
  double err = std::max(std::abs(s2.delta.at(0) - 2.0 / 3.0), std::abs(s2.delta.at(1) + 1.0 / 12.0));
  for (std::size_t j = 0; j < 5; ++j) {
    err = std::max(err, std::abs(s2.qbar_coeffs.at(j) - q4[j]));
    err = std::max(err, std::abs(s2.vbar_coeffs.at(j) - v4[j]));
  }
  const Stencil s1 = multistep_coeffs(1);
  err = std::max(err, std::abs(s1.delta.at(0) - 0.5));

  double slopes[2];
  for (int k : {1, 2}) {
    const Stencil s = multistep_coeffs(k);
    std::vector<double> hs, errs;
    for (int i = 0; i < 5; ++i) {
      const double h = 0.2 / std::pow(2.0, i);
      MatrixXd w(1, 2 * k + 1);
      for (int j = -k; j <= k; ++j) w(0, j + k) = std::sin(0.3 + j * h);
      hs.push_back(h);
      errs.push_back(std::abs(multistep_pair(w, h, s).second(0) - std::cos(0.3)));
    }
    slopes[k - 1] = loglog_slope(hs, errs);
  }
  Outcome o;
  o.pass = err < 1e-12 && std::abs(slopes[0] - 2) <= 0.3 && std::abs(slopes[1] - 4) <= 0.3;
  o.detail = "coefficient error " + fmt(err) + ", slopes " + fmt(slopes[0]) + " (k=1) " + fmt(slopes[1]) + " (k=2)";
  return o;
}

// ---- 3: long-time energy ------------------------------------------------------

Outcome energy_behaviour() {
  const auto t0 = std::chrono::steady_clock::now();
  const LagrangianModel l = analytic_lagrangian(1, [](JetSpan q, JetSpan v) { return 0.5 * square(v[0]) + cos(q[0]); });
  ParameterStore st;
  const double h = 0.1;
  const int n = 100000;
  VectorXd q0(1), q1(1);
  q0 << 1.0;
  q1 << 1.0 + h * 0.2;
  const RolloutResult r = rollout(l, zero_force(1), st, q0, q1, n, false, Scheme::midpoint(h));
  std::vector<double> e(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto [qb, vb] = midpoint_pair(r.q.col(i), r.q.col(i + 1), h);
    e[static_cast<std::size_t>(i)] = energy(l, st, qb, vb);
  }
  double worst = 0;
  for (double x : e) worst = std::max(worst, std::abs(x - e[0]));
  // drift: compare mean deviation of the first and last tenth, and the fitted trend over the run
  auto mean_dev = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t i = a; i < b; ++i) s += e[i] - e[0];
    return s / static_cast<double>(b - a);
  };
  const std::size_t tenth = e.size() / 10;
  const double shift = std::abs(mean_dev(e.size() - tenth, e.size()) - mean_dev(0, tenth));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double t = static_cast<double>(i);
    sx += t;
    sy += e[i];
    sxx += t * t;
    sxy += t * e[i];
  }
  const double m = static_cast<double>(e.size());
  const double trend = std::abs((m * sxy - sx * sy) / (m * sxx - sx * sx)) * m;

  // forward Euler on the same initial state
  double q = 1.0 + 0.1 * h, v = 0.2;
  const double e0 = 0.5 * v * v - std::cos(q);
  double euler = 0;
  for (int i = 0; i < 10000; ++i) {
    const double qn = q + h * v;
    v -= h * std::sin(q);
    q = qn;
  }
  euler = std::abs(0.5 * v * v - std::cos(q) - e0);
  const double secs = seconds_since(t0);

  Outcome o;
  o.pass = worst < 5e-3 && shift < 5e-4 && trend < 5e-4 && euler > 0.1 && secs < 120.0;
  o.detail = "max |E-E0| " + fmt(worst) + ", tenth-to-tenth shift " + fmt(shift) + ", fitted trend " + fmt(trend) +
             ", Euler drift at 1e4 " + fmt(euler) + ", " + fmt(secs) + " s";
  return o;
}

// ---- 4: implicit step vs closed form -----------------------------------------

// L = 1/2 v'Av + q'Bv - 1/2 q'Cq, F = -G v. The midpoint residual is linear in
// the unknown x = q2:
//   K x + c = 0,  K = B/h - C/2 - 2A/h^2 - B'/h - G/h.
VectorXd quadratic_root(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C, const MatrixXd& G,
                        const VectorXd& q0, const VectorXd& q1, double h) {
  const VectorXd qm = 0.5 * (q0 + q1), vm = (q1 - q0) / h;
  const VectorXd minus = (B * vm - C * qm) + (2.0 / h) * (A * vm + B.transpose() * qm) - G * vm;
  const MatrixXd K = B / h - C / 2 - 2 * A / (h * h) - B.transpose() / h - G / h;
  const VectorXd c = minus - B * q1 / h - C * q1 / 2 + 2 * A * q1 / (h * h) - B.transpose() * q1 / h + G * q1 / h;
  return K.fullPivLu().solve(-c);
}

Outcome implicit_oracle() {
  double worst = 0;
  Rng rng(404);
  for (int seed = 0; seed < 100; ++seed) {
    const int d = 1 + seed % 3;
    const MatrixXd P = MatrixXd::NullaryExpr(d, d, [&] { return uniform(1, rng)(0); });
    const MatrixXd A = P.transpose() * P + MatrixXd::Identity(d, d);
    const MatrixXd B = 0.3 * MatrixXd::NullaryExpr(d, d, [&] { return uniform(1, rng)(0); });
    MatrixXd C = MatrixXd::NullaryExpr(d, d, [&] { return uniform(1, rng)(0); });
    C = 0.5 * (C + C.transpose()).eval();
    const MatrixXd R = MatrixXd::NullaryExpr(d, d, [&] { return uniform(1, rng)(0); });
    const MatrixXd G = 0.2 * R.transpose() * R;
    const double h = uniform(1, rng, 0.05, 1.0)(0);
    const VectorXd q0 = uniform(d, rng, -2, 2), q1 = uniform(d, rng, -2, 2);

    const auto l = analytic_lagrangian(d, [=](JetSpan q, JetSpan v) {
      ad::Jet s = 0.0 * v[0];
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
          s = s + (0.5 * A(i, j)) * (v[a] * v[b]) + B(i, j) * (q[a] * v[b]) - (0.5 * C(i, j)) * (q[a] * q[b]);
        }
      return s;
    });
    const auto f = analytic_force(d, [=](JetSpan, JetSpan v) {
      std::vector<ad::Jet> out;
      for (int i = 0; i < d; ++i) {
        ad::Jet s = 0.0 * v[0];
        for (int j = 0; j < d; ++j) s = s + (-G(i, j)) * v[static_cast<std::size_t>(j)];
        out.push_back(s);
      }
      return out;
    });
    ParameterStore st;
    const VectorXd x = implicit_step(l, f, st, q0, q1, Scheme::midpoint(h));
    const VectorXd expect = quadratic_root(A, B, C, G, q0, q1, h);
    worst = std::max(worst, (x - expect).lpNorm<Eigen::Infinity>() / std::max(1.0, expect.lpNorm<Eigen::Infinity>()));
  }

  // hand case: L = v^2/2 - q^2/2, h = 1, q0 = q1 = 1
  const auto hl = analytic_lagrangian(1, [](JetSpan q, JetSpan v) { return 0.5 * square(v[0]) - 0.5 * square(q[0]); });
  ParameterStore st;
  const VectorXd one = VectorXd::Ones(1);
  const double hand = implicit_step(hl, zero_force(1), st, one, one, Scheme::midpoint(1.0))(0);
  const double hand_res = std::abs(del_residual(hl, zero_force(1), st, (MatrixXd(1, 3) << 1, 1, 5.0 / 9).finished(),
                                                Scheme::midpoint(1.0))(0));
  Outcome o;
  o.pass = worst < 1e-12 && std::abs(hand - 0.2) < 1e-12;
  o.detail = "max rel. deviation " + fmt(worst) + " over 100 seeds; hand case root " + fmt(hand) +
             " (1/5; residual at 5/9 is " + fmt(hand_res) + ")";
  return o;
}

// ---- pipeline helpers ------------------------------------------------------

std::map<int, double> eval_means(const fs::path& csv) {
  std::map<int, double> out;
  std::istringstream in(read_text(csv));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) parts.push_back(cell);
    if (parts.size() != 5) continue;
    out[std::stoi(parts[2])] = std::strtod(parts[3].c_str(), nullptr);
  }
  return out;
}

double report_column_min(const fs::path& csv, const std::string& column) {
  std::istringstream in(read_text(csv));
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) return std::nan("");
  const auto col = static_cast<std::size_t>(it - header.begin());
  double lo = std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t i = 0; std::getline(ss, cell, ','); ++i)
      if (i == col) lo = std::min(lo, std::strtod(cell.c_str(), nullptr));
  }
  return lo;
}

double pipeline(const ExperimentConfig& cfg, bool force_off = false) {
  run_gen(cfg);
  run_train(cfg);
  run_rollout(cfg, true);
  run_eval(cfg, true);
  if (force_off) {
    run_rollout(cfg, false);
    run_eval(cfg, false);
  }
  return eval_means(fs::path(cfg.output_dir) / "eval" / to_string(cfg.model) / "errors_force_on.csv").at(35);
}

ExperimentConfig dp_config(std::uint64_t seed) {
  ExperimentConfig c = default_config(Task::DoublePendulum);
  c.seed = seed;
  c.data.train_trajectories = 64;
  c.train.epochs = 5000;
  c.output_dir = scratch("dp_" + std::to_string(seed)).string();
  return c;
}

// ---- 5, 8, 9: double pendulum ------------------------------------------------

struct DpRuns {
  double err35 = 0;
  double secs = 0;
  std::vector<double> min_det;
  ExperimentConfig cfg;
};

DpRuns& dp_runs() {
  static DpRuns runs = [] {
    DpRuns r;
    for (std::uint64_t seed : {0, 1, 2}) {
      ExperimentConfig c = dp_config(seed);
      const auto t0 = std::chrono::steady_clock::now();
      if (seed == 0) {
        r.err35 = pipeline(c);
        r.secs = seconds_since(t0);
        r.cfg = c;
      } else {
        run_gen(c);
        run_train(c);
      }
      r.min_det.push_back(report_column_min(fs::path(c.output_dir) / "model/dflnn/train_report.csv", "min_abs_det_s"));
    }
    return r;
  }();
  return runs;
}

Outcome double_pendulum() {
  const DpRuns& r = dp_runs();
  return {r.err35 < 0.5 && r.secs < 1800, "k=35 error " + fmt(r.err35) + ", " + fmt(r.secs) + " s"};
}

Outcome regularity() {
  const DpRuns& r = dp_runs();
  const double lo = *std::min_element(r.min_det.begin(), r.min_det.end());
  std::string d = "min |det S| per seed:";
  for (double x : r.min_det) d += " " + fmt(x);
  return {lo >= 1e-6, d};
}

Outcome baselines() {
  const DpRuns& r = dp_runs();
  Outcome o{true, ""};
  for (ModelKind m : {ModelKind::Glnn, ModelKind::Node}) {
    ExperimentConfig c = r.cfg;
    c.model = m;
    c.train.epochs = 2000;
    std::string name = to_string(m);
    try {
      run_train(c);
      run_rollout(c, true);
      run_eval(c, true);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail += name + " crashed: " + e.what() + "; ";
      continue;
    }
    // the table must agree with the written predictions: NaN exactly when a
    // prediction failed before step 35
    const fs::path dir = fs::path(c.output_dir) / "rollout" / name / "force_on";
    const TaskData data = load_task_data(c);
    std::vector<MatrixXd> preds, truths;
    int failed = 0;
    for (std::size_t i = 0; i < data.test.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "traj_%04zu.csv", i);
      preds.push_back(trajectory_from_csv(read_text(dir / buf), true).q);
      truths.push_back(data.test[i].q);
      if (!preds.back().allFinite()) ++failed;
    }
    const double table = eval_means(fs::path(c.output_dir) / "eval" / name / "errors_force_on.csv").at(35);
    const ErrorRow again = error_row(name, "dp", preds, truths, 35, false);
    const bool consistent = std::isnan(again.mean) ? std::isnan(table) : std::abs(table - again.mean) <= 1e-12 * again.mean;
    if (!consistent || table == 0.0) o.pass = false;
    o.detail += name + " k=35 " + fmt(table) + " (" + std::to_string(failed) + " failed rollouts); ";
  }
  // forced failure: a GLNN whose Hessian vanishes must produce NaN, never zeros
  {
    ParameterStore st;
    LagrangianConfig lc;
    lc.kind = LagrangianKind::FreeMlp;
    const DynamicsModel dm{create_lagrangian(st, 2, lc), zero_force(2)};
    const BaselineModel b = BaselineModel::make_glnn(dm);
    const BaselineRollout br = baseline_rollout(b, st, VectorXd::Zero(2), VectorXd::Constant(2, 0.1), 40, 0.1);
    const ErrorRow row = error_row("glnn", "dp", {br.q}, {MatrixXd::Zero(2, 41)}, 35, false);
    const bool ok = br.failed && std::isnan(br.q(0, 40)) && std::isnan(row.mean);
    if (!ok) o.pass = false;
    o.detail += std::string("singular GLNN row ") + (std::isnan(row.mean) ? "NaN" : fmt(row.mean));
  }
  return o;
}

// ---- 6: charged particle ----------------------------------------------------

Outcome charged_particle() {
  // noise-free training data gates; the noisy variant is reported alongside
  ExperimentConfig c = default_config(Task::ChargedParticle);
  c.data.train_trajectories = 64;
  c.data.noise_sigma = 0.0;
  c.train.epochs = 2000;
  c.output_dir = scratch("cp").string();
  const auto t0 = std::chrono::steady_clock::now();
  const double err = pipeline(c);
  const double secs = seconds_since(t0);
  ExperimentConfig noisy = default_config(Task::ChargedParticle);
  noisy.data.train_trajectories = 64;
  noisy.train.epochs = 2000;
  noisy.output_dir = scratch("cp_noisy").string();
  const double noisy_err = pipeline(noisy);
  return {err < 0.1 && secs < 1800, "k=35 error " + fmt(err) + ", " + fmt(secs) + " s; with sigma^2 = 1e-2 h training noise " +
                                        fmt(noisy_err) + " (not gated)"};
}

// ---- 7: force separation ----------------------------------------------------

struct SeparationRun {
  Outcome outcome;
  bool pass = false;
};

double mean_decay(const std::vector<MatrixXd>& qs, double h, double omega) {
  double total = 0;
  for (const MatrixXd& q : qs) {
    const Eigen::Index n = q.cols();
    auto amp = [&](Eigen::Index i) {
      const VectorXd v = (q.col(i + 1) - q.col(i - 1)) / (2 * h);
      return std::sqrt(q.col(i).squaredNorm() + v.squaredNorm() / (omega * omega));
    };
    const double a0 = amp(1);
    total += (a0 - amp(n - 2)) / a0;
  }
  return total / static_cast<double>(qs.size());
}

Outcome& separation() {
  static Outcome out = [] {
    ExperimentConfig c = default_config(Task::Oscillator);
    c.output_dir = scratch("osc").string();
    const double err = pipeline(c, true);
    const TaskData data = load_task_data(c);
    std::vector<MatrixXd> off, truth;
    for (std::size_t i = 0; i < data.test.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "traj_%04zu.csv", i);
      off.push_back(trajectory_from_csv(read_text(fs::path(c.output_dir) / "rollout/dflnn/force_off" / buf), true).q);
      truth.push_back(data.test[i].q);
    }
    const double h = c.data.h, w = c.data.oscillator.omega;
    const double d_truth = mean_decay(truth, h, w), d_off = mean_decay(off, h, w);
    Outcome o;
    o.pass = std::abs(d_off) < 0.2 * d_truth && err < 0.05;
    o.detail = "amplitude decay truth " + fmt(d_truth) + ", force off " + fmt(d_off) + "; force-on k=35 error " + fmt(err);
    return o;
  }();
  return out;
}

// ---- 10: pixels -------------------------------------------------------------

Outcome pixels() {
  ExperimentConfig c = default_config(Task::Pixel);
  c.data.train_trajectories = 16;
  c.autoencoder.warmup_epochs = 1000;
  c.output_dir = scratch("pixel").string();
  const auto t0 = std::chrono::steady_clock::now();
  run_gen(c);
  run_train(c);
  const double ae = read_checkpoint(fs::path(c.output_dir) / "model/dflnn/checkpoint.json").header.at("ae_mse").get<double>();
  double err = std::nan("");
  std::string note;
  try {
    run_rollout(c, true);
    run_eval(c, true);
    err = eval_means(fs::path(c.output_dir) / "eval/dflnn/errors_force_on.csv").at(35);
  } catch (const std::exception& e) {
    note = std::string("; ") + e.what();
  }
  return {ae < 5e-3 && err < 2e-2,
          "AE per-pixel mse " + fmt(ae) + ", decoded k=35 per-pixel mse " + fmt(err) + ", " + fmt(seconds_since(t0)) + " s" + note};
}

// ---- 11: csv import ----------------------------------------------------------

Outcome csv_import() {
  const fs::path dir = scratch("csv");
  Rng rng(11);
  // four masses on a chain with springs and light damping
  auto ode = [](const VectorXd& s) {
    VectorXd d(8);
    const VectorXd q = s.head(4), v = s.tail(4);
    VectorXd a(4);
    for (int i = 0; i < 4; ++i) {
      const double left = i > 0 ? q(i - 1) : 0.0, right = i < 3 ? q(i + 1) : 0.0;
      a(i) = -2 * q(i) + left + right - 0.1 * v(i);
    }
    d << v, a;
    return d;
  };
  for (const auto& [sub, count] : {std::pair<std::string, int>{"train", 16}, {"test", 4}}) {
    fs::create_directories(dir / "in" / sub);
    for (int i = 0; i < count; ++i) {
      VectorXd x0(8);
      x0 << uniform(4, rng, -0.5, 0.5), uniform(4, rng, -0.3, 0.3);
      Trajectory t = integrate(ode, x0, 0.1, 20, sub == "train" ? 30 : 50, 4);
      add_noise(t, 0.005, rng);
      char name[32];
      std::snprintf(name, sizeof name, "run_%02d.csv", i);
      write_trajectory_csv(dir / "in" / sub / name, t);
    }
  }
  ExperimentConfig c = default_config(Task::CsvImport);
  c.data.csv_train = (dir / "in/train").string();
  c.data.csv_test = (dir / "in/test").string();
  c.data.savgol_window = 7;
  c.train.epochs = 1000;
  c.output_dir = (dir / "run").string();
  double err = std::nan("");
  std::string note;
  try {
    err = pipeline(c);
  } catch (const std::exception& e) {
    note = std::string(": ") + e.what();
  }
  const Outcome& sep = separation();
  return {std::isfinite(err) && sep.pass,
          "d=4 import smoke k=35 error " + fmt(err) + note + "; separation property " + (sep.pass ? "holds" : "fails")};
}

// ---- 12: determinism ----------------------------------------------------------

Outcome determinism() {
  const fs::path dir = scratch("det");
  nlohmann::json cfg = {{"task", "dp"},
                        {"data", {{"train_trajectories", 12}, {"test_trajectories", 3}}},
                        {"lagrangian", {{"hidden_dim", 16}, {"hidden_layers", 2}}},
                        {"train", {{"epochs", 100}}},
                        {"loss", {{"reg_points", 20}}}};
  write_json(dir / "c.json", cfg);
  auto run = [&](const std::string& out, const char* threads) {
    ::setenv("DLDA_THREADS", threads, 1);
    bool ok = true;
    for (const char* cmd : {"gen", "train", "rollout", "eval"}) {
      const std::string line = std::string(DLDA_CLI_PATH) + " " + cmd + " --config " + (dir / "c.json").string() +
                               " --out " + (dir / out).string() + " > /dev/null 2>&1";
      ok = ok && std::system(line.c_str()) == 0;
    }
    ::unsetenv("DLDA_THREADS");
    return ok;
  };
  if (!run("a", "1") || !run("b", "3")) return {false, "cli pipeline failed"};
  int files = 0, diffs = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir / "a");
    ++files;
    if (!fs::exists(dir / "b" / rel) || read_text(e.path()) != read_text(dir / "b" / rel)) ++diffs;
  }
  int count_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "b"))
    if (e.is_regular_file()) ++count_b;
  const bool has_all = fs::exists(dir / "a/model/dflnn/checkpoint.json") && fs::exists(dir / "a/eval/dflnn/errors_force_on.csv");
  return {diffs == 0 && files == count_b && has_all,
          std::to_string(files) + " artifacts compared across two runs (1 and 3 threads), " + std::to_string(diffs) + " differ"};
}

}  // namespace

int main() {
  std::set<int> only;
  if (const char* env = std::getenv("DLDA_ACCEPT_ONLY")) {
    std::stringstream ss(env);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) only.insert(std::stoi(item));
  }
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, derivatives},      {2, stencils},   {3, energy_behaviour}, {4, implicit_oracle},
      {5, double_pendulum},  {6, charged_particle}, {7, [] { return separation(); }}, {8, regularity},
      {9, baselines},        {10, pixels},    {11, csv_import},      {12, determinism}};
  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
