#pragma once

// Public entry points of the differentiation engine.
//
// Input derivatives are forward mode (Jet), parameter gradients are reverse
// mode (Tape). Objectives that use input derivatives internally simply read
// the jet parts; reverse mode then runs through them.

#include "dlda/jet.hpp"
#include "dlda/params.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace dlda {

// Scalar function of `arity` inputs. inputs[i] is a (1 x B) jet and the
// result must be (1 x B).
struct ScalarFunction {
  int arity = 0;
  std::function<ad::Jet(ParamSource&, std::span<const ad::Jet>)> fn;
};

struct DiffRequest {
  bool want_value = true;
  bool want_input_grad = false;
  bool want_input_hessian = false;
  bool want_param_grad = false;  // gradient of the value w.r.t. the store
};

struct DiffResult {
  double value = 0.0;
  Eigen::VectorXd input_grad;
  Eigen::MatrixXd input_hessian;
  Eigen::VectorXd param_grad;
};

DiffResult evaluate(const ScalarFunction& f, const ParameterStore& params, const Eigen::VectorXd& x,
                    const DiffRequest& request);

struct ValueAndGrad {
  double value = 0.0;
  Eigen::VectorXd grad;
};

ValueAndGrad eval_with_input_grad(const ScalarFunction& f, const ParameterStore& params, const Eigen::VectorXd& x);
Eigen::MatrixXd eval_input_hessian(const ScalarFunction& f, const ParameterStore& params, const Eigen::VectorXd& x);

// Objective built on a fresh tape; must return a 1x1 node.
using Objective = std::function<ad::Var(ParamSource&)>;
ValueAndGrad eval_param_grad(const Objective& objective, const ParameterStore& params);

// Jets for the rows of x (m x B). Input i differentiates along direction
// directions[i] (or is constant when that entry is negative).
std::vector<ad::Jet> seed_rows(ad::Tape& tape, const Eigen::MatrixXd& x, std::span<const int> directions, int dirs,
                               int order);
std::vector<ad::Jet> seed_rows(ad::Var x, std::span<const int> directions, int dirs, int order);

}  // namespace dlda
