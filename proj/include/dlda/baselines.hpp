#pragma once

// Explicit baselines trained on midpoint states xbar = (qbar, vbar):
// GLNN integrates the forced Euler-Lagrange equations solved for the
// acceleration, the neural ODE integrates a free vector field. Both use RK4.

#include "dlda/objective.hpp"
#include "dlda/rollout.hpp"
#include "dlda/training.hpp"

#include <Eigen/Dense>

namespace dlda {

enum class BaselineKind { Glnn, NeuralOde };

struct BaselineModel {
  BaselineKind kind = BaselineKind::Glnn;
  int dim = 1;
  DynamicsModel glnn;  // GLNN only
  Mlp field;           // neural ODE only: R^{2d} -> R^{2d}

  static BaselineModel make_glnn(DynamicsModel model);
  static BaselineModel create_node(ParameterStore& store, int d, int hidden_dim, int hidden_layers,
                                   const std::string& prefix = "node");
  static BaselineModel bind_node(const ParameterStore& store, int d, int hidden_dim, int hidden_layers,
                                 const std::string& prefix = "node");
};

std::string to_string(BaselineKind k);

// qddot = S^{-1} (dL/dq - H_vq v + F). Throws SingularMatrixError.
Eigen::VectorXd glnn_accel(const LagrangianModel& lagrangian, const ForceModel& force, const ParameterStore& params,
                           const Eigen::VectorXd& q, const Eigen::VectorXd& v);

// Batched (d x B); singular columns come back as NaN.
ad::Var glnn_accel_batch(const LagrangianModel& lagrangian, const ForceModel& force, ParamSource& params, ad::Var q,
                         ad::Var v, DropoutState* dropout = nullptr);

// One RK4 step of the state ODE for states x (2d x B).
ad::Var baseline_step_batch(const BaselineModel& model, ParamSource& params, ad::Var x, double h,
                            DropoutState* dropout = nullptr);

// x is (qbar, vbar) stacked. Throws SingularMatrixError for GLNN.
Eigen::VectorXd baseline_step(const BaselineModel& model, const ParameterStore& params, const Eigen::VectorXd& x,
                              double h);

struct BaselineBatch {
  Eigen::MatrixXd from;  // xbar(q_{n-1}, q_n)
  Eigen::MatrixXd to;    // xbar(q_n, q_{n+1})
  double h = 0.1;
};

BaselineBatch make_baseline_batch(const Dataset& data);

ad::Var baseline_loss_batch(const BaselineModel& model, ParamSource& params, const BaselineBatch& batch,
                            DropoutState* dropout = nullptr);
// mean over all triples of |step(xbar(q_{n-1}, q_n)) - xbar(q_n, q_{n+1})|^2
double baseline_loss(const BaselineModel& model, const ParameterStore& params, const Dataset& data);

TrainReport train_baseline(const TrainConfig& cfg, const Dataset& train_set, const Dataset& val_set,
                           const BaselineModel& model, ParameterStore& params);

// Positions recovered with q_{k+1} = qbar_k + (h/2) vbar_k. A singular GLNN
// Hessian fills the remaining columns with NaN.
struct BaselineRollout {
  Eigen::MatrixXd q;
  bool failed = false;
  int failed_step = -1;
};

BaselineRollout baseline_rollout(const BaselineModel& model, const ParameterStore& params, const Eigen::VectorXd& q0,
                                 const Eigen::VectorXd& q1, int n, double h);

}  // namespace dlda
