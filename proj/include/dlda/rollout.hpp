#pragma once

#include "dlda/discretization.hpp"
#include "dlda/mechanics.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace dlda {

struct NewtonConfig {
  double tol = 1e-10;  // infinity norm of the residual
  int max_iters = 50;
  int halvings = 20;
  // Accepted instead of tol when Newton steps have shrunk to round-off.
  double stall_tol = 1e-6;

  void validate() const;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd best, double residual_norm)
      : std::runtime_error(what), best_(std::move(best)), residual_norm_(residual_norm) {}
  const Eigen::VectorXd& best_iterate() const { return best_; }
  double residual_norm() const { return residual_norm_; }

 private:
  Eigen::VectorXd best_;
  double residual_norm_;
};

struct StepInfo {
  Eigen::VectorXd q;
  int iterations = 0;
  double residual_norm = 0.0;
  bool retried = false;
};

// Solves del_residual(q_prev, q_curr, x) = 0 for x with the midpoint scheme.
StepInfo implicit_step_info(const LagrangianModel& lagrangian, const ForceModel& force, const ParameterStore& params,
                            const Eigen::VectorXd& q_prev, const Eigen::VectorXd& q_curr, double h,
                            const NewtonConfig& cfg = {});

Eigen::VectorXd implicit_step(const LagrangianModel& lagrangian, const ForceModel& force, const ParameterStore& params,
                              const Eigen::VectorXd& q_prev, const Eigen::VectorXd& q_curr, const Scheme& scheme,
                              const NewtonConfig& cfg = {});

struct RolloutResult {
  Eigen::MatrixXd q;  // d x (N+1); q.col(0), q.col(1) are the seeds
  std::vector<int> iterations;
  std::vector<bool> converged;
  std::vector<double> residual_norms;
};

class RolloutError : public ConvergenceError {
 public:
  RolloutError(const ConvergenceError& e, RolloutResult partial, int step)
      : ConvergenceError(e), partial_(std::move(partial)), step_(step) {}
  const RolloutResult& partial() const { return partial_; }
  int step() const { return step_; }

 private:
  RolloutResult partial_;
  int step_;
};

// Predicts q_2..q_N. force_on=false replaces the force model by zero.
RolloutResult rollout(const LagrangianModel& lagrangian, const ForceModel& force, const ParameterStore& params,
                      const Eigen::VectorXd& q0, const Eigen::VectorXd& q1, int n, bool force_on, const Scheme& scheme,
                      const NewtonConfig& cfg = {});

// E = vbar . dL/dvbar - L
double energy(const LagrangianModel& lagrangian, const ParameterStore& params, const Eigen::VectorXd& qbar,
              const Eigen::VectorXd& vbar);

// |q_k - qhat_k|^2 for every trajectory (columns are samples).
std::vector<double> extrapolation_errors(const std::vector<Eigen::MatrixXd>& preds,
                                         const std::vector<Eigen::MatrixXd>& truths, Eigen::Index k);
// (1/N_T) sum |q_k - qhat_k|^2
double extrapolation_error(const std::vector<Eigen::MatrixXd>& preds, const std::vector<Eigen::MatrixXd>& truths,
                           Eigen::Index k);

}  // namespace dlda
