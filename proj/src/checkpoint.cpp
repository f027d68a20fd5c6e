#include "dlda/checkpoint.hpp"

#include "dlda/error.hpp"

#include <fstream>
#include <sstream>

namespace dlda {

std::string checkpoint_to_string(const nlohmann::json& header, const ParameterStore& params) {
  nlohmann::json doc;
  doc["format"] = "dlda-checkpoint/1";
  doc["header"] = header;
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& s : params.layout()) {
    layout.push_back({{"name", s.name}, {"offset", s.offset}, {"rows", s.rows}, {"cols", s.cols}});
  }
  doc["layout"] = std::move(layout);
  const auto flat = params.flat();
  doc["params"] = std::vector<double>(flat.data(), flat.data() + flat.size());
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
  if (doc.value("format", "") != "dlda-checkpoint/1") throw ConfigError("checkpoint: unknown format");
  Checkpoint c;
  c.header = doc.at("header");
  for (const auto& s : doc.at("layout")) {
    const std::size_t idx = c.params.add(s.at("name").get<std::string>(), s.at("rows").get<int>(), s.at("cols").get<int>());
    if (c.params.slice(idx).offset != s.at("offset").get<std::size_t>()) throw ConfigError("checkpoint: layout offsets");
  }
  const auto values = doc.at("params").get<std::vector<double>>();
  if (values.size() != c.params.size()) throw ConfigError("checkpoint: parameter count does not match layout");
  for (std::size_t i = 0; i < values.size(); ++i) c.params.flat()(static_cast<Eigen::Index>(i)) = values[i];
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const nlohmann::json& header, const ParameterStore& params) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << checkpoint_to_string(header, params);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace dlda
