#include "dlda/error.hpp"
#include "dlda/experiment.hpp"
#include "dlda/rollout.hpp"
#include "dlda/trajectory_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using nlohmann::json;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> model;
  std::optional<std::string> task;
  std::optional<int> k;
  bool force_off = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--model", f.model, "dflnn | glnn | node");
  cmd->add_option("--task", f.task, "dp | cp | pixel | csv-import | oscillator");
  cmd->add_option("--k", f.k, "evaluate the error at this step only");
  cmd->add_flag("--force-off", f.force_off, "roll out / evaluate with the learned force switched off");
}

dlda::ExperimentConfig resolve(const Flags& f) {
  json doc = f.config.empty() ? json::object() : dlda::read_json(f.config);
  if (!doc.is_object()) throw dlda::ConfigError("config: document must be an object");
  if (f.task) doc["task"] = *f.task;
  if (f.seed) doc["seed"] = *f.seed;
  if (f.out) doc["output_dir"] = *f.out;
  if (f.model) doc["model"] = *f.model;
  if (f.k) doc["eval"]["k"] = json::array({*f.k});
  return dlda::config_from_json(doc);
}

std::string kind_of(const std::exception& e) {
  if (dynamic_cast<const dlda::ConfigError*>(&e)) return "config";
  if (dynamic_cast<const dlda::DimensionError*>(&e)) return "dimension";
  if (dynamic_cast<const dlda::SingularMatrixError*>(&e)) return "singular";
  if (dynamic_cast<const dlda::ConvergenceError*>(&e)) return "convergence";
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return "io";
  return "internal";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forced discrete Lagrangian dynamics from position data"};
  app.require_subcommand(1);
  Flags flags;
  std::string command;
  for (const char* name : {"gen", "train", "rollout", "eval", "config"}) {
    CLI::App* cmd = app.add_subcommand(name);
    add_flags(cmd, flags);
    cmd->callback([&command, name] { command = name; });
  }
  app.get_subcommand("gen")->description("generate train/test datasets and a manifest");
  app.get_subcommand("train")->description("train the configured model; writes a checkpoint and a report CSV");
  app.get_subcommand("rollout")->description("predict the test trajectories from their first two samples");
  app.get_subcommand("eval")->description("write the extrapolation error table (model,task,k,mean,std)");
  app.get_subcommand("config")->description("print the resolved configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
    return code;
  }

  try {
    const dlda::ExperimentConfig cfg = resolve(flags);
    const bool force_on = !flags.force_off;
    std::filesystem::path out;
    if (command == "gen") {
      out = dlda::run_gen(cfg);
    } else if (command == "train") {
      out = dlda::run_train(cfg);
    } else if (command == "rollout") {
      out = dlda::run_rollout(cfg, force_on);
    } else if (command == "eval") {
      out = dlda::run_eval(cfg, force_on);
      std::cout << dlda::read_text(out);
    } else {
      std::cout << dlda::config_to_json(cfg).dump(2) << "\n";
      return 0;
    }
    std::cerr << json{{"status", "ok"}, {"command", command}, {"output", out.string()}, {"config_hash", dlda::config_hash(cfg)}}.dump()
              << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", kind_of(e)}, {"command", command}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
}
