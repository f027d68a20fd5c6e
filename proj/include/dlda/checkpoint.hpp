#pragma once

#include "dlda/params.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace dlda {

// Checkpoint file: a JSON document with a free-form "header" object (model
// spec echo, hashes) plus the store layout and every parameter value. Doubles
// are written in shortest round-trip form, so a read gives back the exact
// store.
struct Checkpoint {
  nlohmann::json header;
  ParameterStore params;
};

std::string checkpoint_to_string(const nlohmann::json& header, const ParameterStore& params);
Checkpoint checkpoint_from_string(const std::string& text);

void write_checkpoint(const std::filesystem::path& path, const nlohmann::json& header, const ParameterStore& params);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace dlda
