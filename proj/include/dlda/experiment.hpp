#pragma once

#include "dlda/config.hpp"
#include "dlda/trajectory.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace dlda {

struct TaskData {
  Dataset train;
  Dataset test;
  Dataset test_conservative;  // same initial states, no dissipation; empty for csv-import
  // pixel task: the angles behind the frames
  Dataset train_angles;
  Dataset test_angles;
};

// Deterministic in (task, seed, data settings).
TaskData generate_task_data(const ExperimentConfig& cfg);

// Output layout under cfg.output_dir:
//   data/{train,test,test_conservative}/  trajectory (or frame) CSVs + data/manifest.json
//   model/<model>/checkpoint.json, train_report.csv
//   rollout/<model>/{force_on,force_off}/  predicted CSVs, Newton sidecars, manifest.json
//   eval/<model>/errors_{force_on,force_off}.csv
std::filesystem::path run_gen(const ExperimentConfig& cfg);
std::filesystem::path run_train(const ExperimentConfig& cfg);
std::filesystem::path run_rollout(const ExperimentConfig& cfg, bool force_on);
std::filesystem::path run_eval(const ExperimentConfig& cfg, bool force_on);

// Reads back what run_gen wrote; refuses a manifest whose data hash differs.
TaskData load_task_data(const ExperimentConfig& cfg);

struct ErrorRow {
  std::string model;
  std::string task;
  int k = 0;
  double mean = 0.0;
  double std = 0.0;
};

// Squared position error (per-pixel MSE for frames) at step k, mean and
// population std over trajectories. Any NaN prediction makes the row NaN.
ErrorRow error_row(const std::string& model, const std::string& task, const std::vector<Eigen::MatrixXd>& preds,
                   const std::vector<Eigen::MatrixXd>& truths, int k, bool per_pixel);
std::string error_table_csv(const std::vector<ErrorRow>& rows);

// Worker count from DLDA_THREADS (default 1).
int thread_count();

}  // namespace dlda
