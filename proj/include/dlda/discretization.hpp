#pragma once

// Position stencils and the discrete forced Euler-Lagrange residual.
//
// Both schemes are described by a point stencil: a point anchored at sample
// i uses samples i+j for j in `offsets`, with
//   qbar = sum_j qbar[j] q_{i+j},   vbar = (1/h) sum_j vbar[j] q_{i+j}.
// The residual at window centre n collects every point that touches q_n.

#include "dlda/mechanics.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace dlda {

enum class SchemeKind { Midpoint, Multistep };

struct PointStencil {
  std::vector<int> offsets;
  std::vector<double> qbar;
  std::vector<double> vbar;  // without the 1/h
};

struct Stencil {
  int k = 1;
  std::vector<double> delta;        // delta[j-1] = delta_j, j = 1..k
  std::vector<double> qbar_coeffs;  // offsets -k..k
  std::vector<double> vbar_coeffs;  // offsets -k..k, signed delta, without 1/h
};

struct Scheme {
  SchemeKind kind = SchemeKind::Midpoint;
  int k = 1;  // multistep only
  double h = 0.1;

  static Scheme midpoint(double h) { return {SchemeKind::Midpoint, 1, h}; }
  static Scheme multistep(int k, double h) { return {SchemeKind::Multistep, k, h}; }

  void validate() const;
  PointStencil point_stencil() const;
  // Samples per residual window: 3 (midpoint) or 4k+1.
  int window_size() const;
};

std::pair<Eigen::VectorXd, Eigen::VectorXd> midpoint_pair(const Eigen::VectorXd& qa, const Eigen::VectorXd& qb, double h);

Stencil multistep_coeffs(int k);

// window is d x (2k+1), column k is q_n.
std::pair<Eigen::VectorXd, Eigen::VectorXd> multistep_pair(const Eigen::MatrixXd& window, double h, const Stencil& s);

// Index plan for evaluating every window of a set of trajectories in one
// batch. Samples of all trajectories are concatenated column-wise.
struct WindowPlan {
  Scheme scheme;
  PointStencil stencil;
  Eigen::Index num_samples = 0;
  Eigen::Index num_points = 0;
  Eigen::Index num_windows = 0;
  std::vector<std::vector<Eigen::Index>> point_src;   // [slot][point] -> sample column
  std::vector<std::vector<Eigen::Index>> window_src;  // [slot][window] -> point (anchored at n - offset)
  std::vector<Eigen::Index> window_centre;            // sample column of q_n
};

WindowPlan make_window_plan(std::span<const Eigen::Index> lengths, const Scheme& scheme);

// qbar/vbar of every plan point, each (d x num_points).
struct PointValues {
  ad::Var qbar;
  ad::Var vbar;
};
PointValues plan_points(ad::Var positions, const WindowPlan& plan);

// Bracketed residual for every window, (d x num_windows). For the midpoint
// scheme this is
//   dqL(-) + (2/h) dvL(-) + dqL(+) - (2/h) dvL(+) + F(-) + F(+).
// The multistep residual uses the same scaling: 2/h times the derivative of
// the discrete action plus forces paired with h dqbar/dq_n.
ad::Var residual_batch(const LagrangianModel& lagrangian, const ForceModel& force, ParamSource& params,
                       ad::Var positions, const WindowPlan& plan, DropoutState* dropout = nullptr);

// Single window: window is d x scheme.window_size().
Eigen::VectorXd del_residual(const LagrangianModel& lagrangian, const ForceModel& force, const ParameterStore& params,
                             const Eigen::MatrixXd& window, const Scheme& scheme);

}  // namespace dlda
