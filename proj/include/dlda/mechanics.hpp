#pragma once

// Learned physics: Lagrangian L(q, v) and generalized force F(q, v).
//
// All evaluation is batched: q and v are d jets of shape (1 x B), one per
// coordinate. Lower-triangular factors are packed row-major over i >= j.

#include "dlda/jet.hpp"
#include "dlda/networks.hpp"
#include "dlda/params.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dlda {

constexpr int tri_size(int d) { return d * (d + 1) / 2; }
constexpr int tri_index(int i, int j) { return i * (i + 1) / 2 + j; }

using JetSpan = std::span<const ad::Jet>;

// Plain MLP R^{2d} -> R.
struct FreeMlpLagrangian {
  Mlp net;
};

// L = v^T M(q) v - U, M = eps I + Lambda^T Lambda. No 1/2 on the kinetic
// term; any such factor is absorbed into Lambda.
struct MechanicalLagrangian {
  Mlp lambda_net;     // R^d -> R^{d(d+1)/2}
  Mlp potential_net;  // R^d (or R^{2d} with velocity) -> R
  double epsilon = 1e-3;
  bool potential_uses_velocity = false;
};

// Hand-written Lagrangian, used by tests and reference runs.
struct AnalyticLagrangian {
  std::function<ad::Jet(JetSpan q, JetSpan v)> fn;
};

struct LagrangianModel {
  int dim = 1;
  std::variant<FreeMlpLagrangian, MechanicalLagrangian, AnalyticLagrangian> impl;

  bool is_mechanical() const { return std::holds_alternative<MechanicalLagrangian>(impl); }
};

struct NoForce {};

// MLP R^{2d} -> R^d; dropout on hidden layers while training.
struct FreeForce {
  Mlp net;
  double dropout_rate = 0.5;
};

// F = -A(q)^T A(q) v with A lower triangular from an MLP.
struct RayleighForce {
  Mlp factor_net;  // R^d -> R^{d(d+1)/2}
};

// F = -A^T A v with constant A.
struct LinearRayleighForce {
  std::size_t factor_slice = 0;  // d(d+1)/2 x 1
};

struct CombinedForce {
  RayleighForce rayleigh;
  FreeForce free;
};

struct AnalyticForce {
  std::function<std::vector<ad::Jet>(JetSpan q, JetSpan v)> fn;
};

struct ForceModel {
  int dim = 1;
  std::variant<NoForce, FreeForce, RayleighForce, LinearRayleighForce, CombinedForce, AnalyticForce> impl;

  bool is_zero() const { return std::holds_alternative<NoForce>(impl); }
  bool uses_dropout() const {
    return std::holds_alternative<FreeForce>(impl) || std::holds_alternative<CombinedForce>(impl);
  }
  double dropout_rate() const;
};

// ---- construction ------------------------------------------------------

enum class LagrangianKind { FreeMlp, Mechanical };
enum class ForceKind { None, Free, Rayleigh, LinearRayleigh, Combined };

struct LagrangianConfig {
  LagrangianKind kind = LagrangianKind::Mechanical;
  int hidden_dim = 30;
  int hidden_layers = 3;
  double epsilon = 1e-3;
  bool potential_uses_velocity = false;
};

struct ForceConfig {
  ForceKind kind = ForceKind::LinearRayleigh;
  int hidden_dim = 30;
  int hidden_layers = 3;
  double dropout = 0.5;
};

std::string to_string(LagrangianKind k);
std::string to_string(ForceKind k);
LagrangianKind lagrangian_kind_from_string(const std::string& s);
ForceKind force_kind_from_string(const std::string& s);

// create_* registers slices under `prefix`; bind_* finds them again.
LagrangianModel create_lagrangian(ParameterStore& store, int d, const LagrangianConfig& cfg,
                                  const std::string& prefix = "L");
LagrangianModel bind_lagrangian(const ParameterStore& store, int d, const LagrangianConfig& cfg,
                                const std::string& prefix = "L");
ForceModel create_force(ParameterStore& store, int d, const ForceConfig& cfg, const std::string& prefix = "F");
ForceModel bind_force(const ParameterStore& store, int d, const ForceConfig& cfg, const std::string& prefix = "F");

void init_lagrangian(const LagrangianModel& model, ParameterStore& store, Rng& rng);
void init_force(const ForceModel& model, ParameterStore& store, Rng& rng);

LagrangianModel analytic_lagrangian(int d, std::function<ad::Jet(JetSpan, JetSpan)> fn);
ForceModel analytic_force(int d, std::function<std::vector<ad::Jet>(JetSpan, JetSpan)> fn);
ForceModel zero_force(int d);

// ---- evaluation --------------------------------------------------------

ad::Jet lagrangian_jet(const LagrangianModel& model, ParamSource& params, JetSpan q, JetSpan v);
std::vector<ad::Jet> force_jet(const ForceModel& model, ParamSource& params, JetSpan q, JetSpan v,
                               DropoutState* dropout = nullptr);

double lagrangian_eval(const LagrangianModel& model, const ParameterStore& params, const Eigen::VectorXd& q,
                       const Eigen::VectorXd& v);
// M(q) = eps I + Lambda^T Lambda. Only for the mechanical variant.
Eigen::MatrixXd mass_matrix(const LagrangianModel& model, const ParameterStore& params, const Eigen::VectorXd& q);
Eigen::VectorXd force_eval(const ForceModel& model, const ParameterStore& params, const Eigen::VectorXd& q,
                           const Eigen::VectorXd& v, DropoutState* dropout = nullptr);

}  // namespace dlda
