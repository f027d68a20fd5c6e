#pragma once

#include "dlda/discretization.hpp"
#include "dlda/mechanics.hpp"
#include "dlda/networks.hpp"
#include "dlda/trajectory.hpp"

#include <Eigen/Dense>

#include <vector>

namespace dlda {

struct DynamicsModel {
  LagrangianModel lagrangian;
  ForceModel force;
};

// How the physics sum is normalised: by N_T(N+1) samples, or by the number
// of windows actually summed.
enum class PhysicsNormalizer { Samples, Windows };

struct LossWeights {
  double physics = 0.5;
  double reg = 0.5;
  double ae = 0.0;
  int reg_points = 100;
  PhysicsNormalizer normalizer = PhysicsNormalizer::Samples;
  bool squared_residual = false;

  void validate() const;
};

constexpr double kResidualSmoothing = 1e-12;

// Consecutive training pair (q_r, q_{r+1}).
struct RegPoint {
  std::size_t trajectory = 0;
  Eigen::Index index = 0;
  Eigen::VectorXd qa;
  Eigen::VectorXd qb;
};

// (h/2) sqrt(|r|^2 + 1e-12), or ((h/2)|r|)^2 when squared.
double physics_loss(const LagrangianModel& lagrangian, const ForceModel& force, const ParameterStore& params,
                    const Eigen::MatrixXd& window, const Scheme& scheme, bool squared = false);

// S = d^2 L / dv^2 at the midpoint pair of (qa, qb).
Eigen::MatrixXd velocity_hessian(const LagrangianModel& lagrangian, const ParameterStore& params,
                                 const Eigen::VectorXd& qbar, const Eigen::VectorXd& vbar);
// |log |det S||; +inf when S is singular.
double reg_loss(const LagrangianModel& lagrangian, const ParameterStore& params, const RegPoint& point, double h);

// (d/l) |q - psi(phi(q))|^2
double ae_loss(const Autoencoder& ae, const ParameterStore& params, const Eigen::VectorXd& q);

// ---- batched building blocks ---------------------------------------------

// Concatenated samples plus the window plan for a dataset.
struct Batch {
  Eigen::MatrixXd positions;
  WindowPlan plan;
  Eigen::Index trajectories = 0;
};

Batch make_batch(const Dataset& data, const Scheme& scheme);

// Sum over windows of the per-window physics loss, 1x1.
ad::Var physics_sum(const DynamicsModel& model, ParamSource& params, ad::Var positions, const WindowPlan& plan,
                    bool squared, DropoutState* dropout = nullptr);

// log|det S| at every pair (1 x R). qa, qb are (d x R).
ad::Var reg_logabsdet(const LagrangianModel& lagrangian, ParamSource& params, ad::Var qa, ad::Var qb, double h);

struct RegSet {
  Eigen::MatrixXd qa;
  Eigen::MatrixXd qb;
  double h = 0.1;
  Eigen::Index size() const { return qa.cols(); }
};

RegSet make_reg_set(const std::vector<RegPoint>& points, double h);

struct LossParts {
  ad::Var total;
  ad::Var physics;  // weighted, normalised
  ad::Var reg;      // weighted, normalised
  Eigen::RowVectorXd logabsdet;
};

LossParts dflnn_loss(const DynamicsModel& model, ParamSource& params, const Batch& data, const RegSet& reg,
                     const LossWeights& weights, DropoutState* dropout = nullptr);

double total_loss(const Dataset& data, const DynamicsModel& model, const ParameterStore& params,
                  const LossWeights& weights, const Scheme& scheme, const std::vector<RegPoint>& reg_points);

}  // namespace dlda
