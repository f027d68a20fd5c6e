#pragma once

#include "dlda/data.hpp"
#include "dlda/discretization.hpp"
#include "dlda/mechanics.hpp"
#include "dlda/networks.hpp"
#include "dlda/objective.hpp"
#include "dlda/rollout.hpp"
#include "dlda/training.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dlda {

enum class Task { DoublePendulum, ChargedParticle, Pixel, CsvImport, Oscillator };
enum class ModelKind { Dflnn, Glnn, Node };

std::string to_string(Task t);
std::string to_string(ModelKind m);
Task task_from_string(const std::string& s);
ModelKind model_from_string(const std::string& s);

struct DataConfig {
  int train_trajectories = 320;
  int test_trajectories = 10;
  int train_steps = 20;
  int test_steps = 50;
  double h = 0.1;
  int substeps = 100;
  double noise_sigma = 0.0;
  double max_angle = 3.14159265358979323846 / 6;
  DoublePendulumParams double_pendulum;
  ChargedParticleParams charged_particle;
  PendulumParams pendulum;
  OscillatorParams oscillator;
  // csv-import: directories of trajectory CSVs, read in file-name order
  std::string csv_train;
  std::string csv_test;
  int savgol_window = 0;  // 0 = no smoothing
  int savgol_polyorder = 3;
};

struct AutoencoderConfig {
  int latent_dim = 1;
  int hidden_dim = 64;
  int hidden_layers = 1;
  int warmup_epochs = 0;
  double target_mse = 5e-3;
};

struct BaselineConfig {
  int hidden_dim = 30;
  int hidden_layers = 3;
  LagrangianKind glnn_lagrangian = LagrangianKind::FreeMlp;
};

struct RolloutConfig {
  int steps = 50;
};

struct ExperimentConfig {
  Task task = Task::DoublePendulum;
  ModelKind model = ModelKind::Dflnn;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  SchemeKind scheme_kind = SchemeKind::Midpoint;
  int scheme_k = 1;
  DataConfig data;
  LagrangianConfig lagrangian;
  ForceConfig force;
  LossWeights loss;
  TrainConfig train;
  AutoencoderConfig autoencoder;
  BaselineConfig baseline;
  NewtonConfig newton;
  RolloutConfig rollout;
  std::vector<int> eval_k{35};

  Scheme scheme() const;
  // Position dimension of the task (latent dimension for pixels).
  int dynamics_dim() const;
  void validate() const;
};

// Per-task defaults.
ExperimentConfig default_config(Task task);
nlohmann::json default_config_json(Task task);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
// Missing keys take the defaults of the document's task; unknown keys and
// wrongly typed values throw ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

// Hash of the canonical (sorted-key, compact) JSON.
std::string config_hash(const ExperimentConfig& cfg);
// Hash of the settings that determine the datasets.
std::string data_hash(const ExperimentConfig& cfg);
// Hash of the data hash plus everything that determines the trained model.
std::string model_hash(const ExperimentConfig& cfg);

// Stream-specific seeds from the master seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace dlda
