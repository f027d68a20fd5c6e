#pragma once

#include "dlda/objective.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dlda {

struct TrainConfig {
  double lr = 1e-3;
  int epochs = 20000;
  std::optional<int> batch_size;  // windows per step; empty = full batch
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  double grad_clip = 0.0;  // global norm; 0 = off
  int max_nonfinite = 5;   // consecutive skipped epochs before aborting

  void validate() const;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;
};

// Returns false (and leaves params/state untouched) when grad is not finite.
bool adam_step(ParameterStore& params, const Eigen::VectorXd& grad, AdamState& state, const TrainConfig& cfg);

// R distinct consecutive pairs, uniformly without replacement. R larger than
// the number of pairs returns every pair and appends a warning.
std::vector<RegPoint> select_reg_points(const Dataset& data, int r, Rng& rng, std::vector<std::string>* warnings = nullptr);

// Whole trajectories go to validation; at least one stays in training.
std::pair<Dataset, Dataset> split_by_trajectory(const Dataset& data, double validation_fraction, Rng& rng);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::map<std::string, double> metrics;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  std::vector<std::string> events;
  bool aborted = false;

  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct StepContext {
  bool training = false;
  DropoutState* dropout = nullptr;
  Rng* rng = nullptr;
  std::map<std::string, double> metrics;
};

using LossBuilder = std::function<ad::Var(ParamSource&, StepContext&)>;

struct TrainProblem {
  LossBuilder train_loss;
  LossBuilder val_loss;  // evaluated without gradients, dropout off
  int steps_per_epoch = 1;
  double dropout_rate = 0.0;
};

// Full training loop. Leaves the parameters of the best validation epoch in
// params.
TrainReport train_loop(ParameterStore& params, const TrainProblem& problem, const TrainConfig& cfg);

struct TrainOutcome {
  TrainReport report;
  std::vector<RegPoint> reg_points;
  std::size_t train_trajectories = 0;
  std::size_t val_trajectories = 0;
};

// Splits data, selects the regularisation pairs and minimises the total loss.
TrainOutcome train(const TrainConfig& cfg, const Dataset& data, const DynamicsModel& model, ParameterStore& params,
                   const LossWeights& weights, const Scheme& scheme);

// Same, with an explicit split and regularisation set.
TrainReport train_dflnn(const TrainConfig& cfg, const Dataset& train_set, const Dataset& val_set,
                        const DynamicsModel& model, ParameterStore& params, const LossWeights& weights,
                        const Scheme& scheme, const std::vector<RegPoint>& reg_points);

}  // namespace dlda
