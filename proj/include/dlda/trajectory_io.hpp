#pragma once

#include "dlda/trajectory.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace dlda {

// Header t,q0,...,q{d-1}; 17 significant digits. NaN marks predictions past
// a failed step and is only accepted with allow_nan.
std::string trajectory_to_csv(const Trajectory& traj);
Trajectory trajectory_from_csv(const std::string& text, bool allow_nan = false);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

// One frame per row, no header.
std::string frames_to_csv(const Eigen::MatrixXd& frames);
Eigen::MatrixXd frames_from_csv(const std::string& text);
void write_frames_csv(const std::filesystem::path& path, const Eigen::MatrixXd& frames);
Eigen::MatrixXd read_frames_csv(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

// FNV-1a 64, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace dlda
