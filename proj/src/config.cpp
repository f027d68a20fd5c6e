#include "dlda/config.hpp"

#include "dlda/error.hpp"
#include "dlda/trajectory_io.hpp"

#include <cmath>

namespace dlda {

using nlohmann::json;

std::string to_string(Task t) {
  switch (t) {
    case Task::DoublePendulum: return "dp";
    case Task::ChargedParticle: return "cp";
    case Task::Pixel: return "pixel";
    case Task::CsvImport: return "csv-import";
    case Task::Oscillator: return "oscillator";
  }
  return "?";
}

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::Dflnn: return "dflnn";
    case ModelKind::Glnn: return "glnn";
    case ModelKind::Node: return "node";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  for (Task t : {Task::DoublePendulum, Task::ChargedParticle, Task::Pixel, Task::CsvImport, Task::Oscillator})
    if (to_string(t) == s) return t;
  throw ConfigError("unknown task '" + s + "' (expected dp, cp, pixel, csv-import or oscillator)");
}

ModelKind model_from_string(const std::string& s) {
  for (ModelKind m : {ModelKind::Dflnn, ModelKind::Glnn, ModelKind::Node})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown model '" + s + "' (expected dflnn, glnn or node)");
}

namespace {

std::string normalizer_name(PhysicsNormalizer n) { return n == PhysicsNormalizer::Samples ? "samples" : "windows"; }

PhysicsNormalizer normalizer_from(const std::string& s) {
  if (s == "samples") return PhysicsNormalizer::Samples;
  if (s == "windows") return PhysicsNormalizer::Windows;
  throw ConfigError("unknown loss.normalizer '" + s + "' (expected samples or windows)");
}

std::string scheme_name(SchemeKind k) { return k == SchemeKind::Midpoint ? "midpoint" : "multistep"; }

SchemeKind scheme_from(const std::string& s) {
  if (s == "midpoint") return SchemeKind::Midpoint;
  if (s == "multistep") return SchemeKind::Multistep;
  throw ConfigError("unknown scheme.kind '" + s + "' (expected midpoint or multistep)");
}

bool same_kind(const json& base, const json& v) {
  if (base.is_null()) return v.is_null() || v.is_number_integer();
  if (base.is_number_integer()) return v.is_number_integer();
  if (base.is_number()) return v.is_number();
  if (base.is_boolean()) return v.is_boolean();
  if (base.is_string()) return v.is_string();
  if (base.is_array()) {
    if (!v.is_array()) return false;
    const bool ints = base.empty() || base[0].is_number_integer();
    for (const auto& e : v)
      if (ints ? !e.is_number_integer() : !e.is_number()) return false;
    return true;
  }
  return false;
}

void overlay(json& base, const json& over, const std::string& path) {
  if (!over.is_object()) throw ConfigError("config: '" + (path.empty() ? std::string("<root>") : path) + "' must be an object");
  for (auto it = over.begin(); it != over.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("config: unknown key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      overlay(slot, it.value(), key);
    } else {
      if (!same_kind(slot, it.value())) throw ConfigError("config: wrong type for '" + key + "'");
      slot = it.value();
    }
  }
}

json dp_json(const DoublePendulumParams& p) {
  return {{"m1", p.m1}, {"m2", p.m2}, {"l1", p.l1}, {"l2", p.l2}, {"g", p.g}, {"b1", p.b1}, {"b2", p.b2}};
}

json cp_json(const ChargedParticleParams& p) {
  return {{"charge", p.charge}, {"mass", p.mass}, {"damping", p.damping}, {"field", {p.field.x(), p.field.y(), p.field.z()}}};
}

}  // namespace

Scheme ExperimentConfig::scheme() const {
  return scheme_kind == SchemeKind::Midpoint ? Scheme::midpoint(data.h) : Scheme::multistep(scheme_k, data.h);
}

int ExperimentConfig::dynamics_dim() const {
  switch (task) {
    case Task::DoublePendulum: return 2;
    case Task::ChargedParticle: return 3;
    case Task::Pixel: return autoencoder.latent_dim;
    case Task::Oscillator: return 1;
    case Task::CsvImport: return 0;
  }
  return 0;
}

void ExperimentConfig::validate() const {
  scheme().validate();
  loss.validate();
  train.validate();
  newton.validate();
  const auto& d = data;
  if (d.train_trajectories < 1 || d.test_trajectories < 1) throw ConfigError("data: trajectory counts must be >= 1");
  if (d.train_steps < 2 || d.test_steps < 2) throw ConfigError("data: steps must be >= 2");
  if (!(d.h > 0.0)) throw ConfigError("data.h must be > 0");
  if (d.substeps < 1) throw ConfigError("data.substeps must be >= 1");
  if (d.noise_sigma < 0.0) throw ConfigError("data.noise_sigma must be >= 0");
  if (!(d.max_angle > 0.0)) throw ConfigError("data.max_angle must be > 0");
  d.double_pendulum.validate();
  d.charged_particle.validate();
  d.pendulum.validate();
  if (d.savgol_window != 0 && (d.savgol_window < 1 || d.savgol_window % 2 == 0 || d.savgol_polyorder < 0 ||
                               d.savgol_polyorder >= d.savgol_window)) {
    throw ConfigError("data: savgol_window must be 0 or odd and larger than savgol_polyorder");
  }
  if (task == Task::CsvImport && (d.csv_train.empty() || d.csv_test.empty()))
    throw ConfigError("csv-import needs data.csv_train and data.csv_test");
  if (task == Task::Pixel && model != ModelKind::Dflnn) throw ConfigError("pixel task supports model dflnn only");
  if (task == Task::Pixel && scheme_kind != SchemeKind::Midpoint) throw ConfigError("pixel task supports the midpoint scheme only");
  if (lagrangian.hidden_dim < 1 || lagrangian.hidden_layers < 0 || force.hidden_dim < 1 || force.hidden_layers < 0 ||
      baseline.hidden_dim < 1 || baseline.hidden_layers < 0) {
    throw ConfigError("network sizes must be positive");
  }
  if (force.dropout < 0.0 || force.dropout >= 1.0) throw ConfigError("force.dropout must be in [0, 1)");
  if (lagrangian.epsilon < 0.0) throw ConfigError("lagrangian.epsilon must be >= 0");
  AutoencoderSpec{kFrameSize, autoencoder.latent_dim, autoencoder.hidden_dim, autoencoder.hidden_layers}.validate();
  if (autoencoder.warmup_epochs < 0) throw ConfigError("autoencoder.warmup_epochs must be >= 0");
  if (!(autoencoder.target_mse > 0.0)) throw ConfigError("autoencoder.target_mse must be > 0");
  if (rollout.steps < 2) throw ConfigError("rollout.steps must be >= 2");
  if (rollout.steps > d.test_steps) throw ConfigError("rollout.steps must not exceed data.test_steps");
  if (eval_k.empty()) throw ConfigError("eval.k must not be empty");
  for (int k : eval_k)
    if (k < 2 || k > rollout.steps) throw ConfigError("eval.k entries must lie in [2, rollout.steps]");
}

ExperimentConfig default_config(Task task) {
  ExperimentConfig c;
  c.task = task;
  c.train.epochs = 20000;
  c.loss.reg_points = 100;
  switch (task) {
    case Task::DoublePendulum:
      c.data.noise_sigma = default_noise_sigma(c.data.h);
      break;
    case Task::ChargedParticle:
      c.data.noise_sigma = default_noise_sigma(c.data.h);
      c.lagrangian.potential_uses_velocity = true;
      break;
    case Task::Pixel:
      c.data.h = 0.05;
      c.data.train_steps = 100;
      c.loss.physics = 0.9;
      c.loss.reg = 0.1;
      c.loss.ae = 1.0;
      c.loss.reg_points = 20;
      c.loss.normalizer = PhysicsNormalizer::Windows;
      c.train.batch_size = 1000;
      c.train.epochs = 5000;
      break;
    case Task::Oscillator:
      c.data.train_trajectories = 16;
      c.data.train_steps = 50;
      c.train.epochs = 5000;
      break;
    case Task::CsvImport:
      c.data.csv_train = "csv/train";
      c.data.csv_test = "csv/test";
      break;
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  const auto& d = c.data;
  json j;
  j["task"] = to_string(c.task);
  j["model"] = to_string(c.model);
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["scheme"] = {{"kind", scheme_name(c.scheme_kind)}, {"k", c.scheme_k}};
  j["data"] = {{"train_trajectories", d.train_trajectories},
               {"test_trajectories", d.test_trajectories},
               {"train_steps", d.train_steps},
               {"test_steps", d.test_steps},
               {"h", d.h},
               {"substeps", d.substeps},
               {"noise_sigma", d.noise_sigma},
               {"max_angle", d.max_angle},
               {"double_pendulum", dp_json(d.double_pendulum)},
               {"charged_particle", cp_json(d.charged_particle)},
               {"pendulum", {{"g", d.pendulum.g}, {"length", d.pendulum.length}, {"damping", d.pendulum.damping}}},
               {"oscillator", {{"omega", d.oscillator.omega}, {"gamma", d.oscillator.gamma}}},
               {"csv_train", d.csv_train},
               {"csv_test", d.csv_test},
               {"savgol_window", d.savgol_window},
               {"savgol_polyorder", d.savgol_polyorder}};
  j["lagrangian"] = {{"kind", to_string(c.lagrangian.kind)},
                     {"hidden_dim", c.lagrangian.hidden_dim},
                     {"hidden_layers", c.lagrangian.hidden_layers},
                     {"epsilon", c.lagrangian.epsilon},
                     {"potential_uses_velocity", c.lagrangian.potential_uses_velocity}};
  j["force"] = {{"kind", to_string(c.force.kind)},
                {"hidden_dim", c.force.hidden_dim},
                {"hidden_layers", c.force.hidden_layers},
                {"dropout", c.force.dropout}};
  j["loss"] = {{"physics", c.loss.physics},
               {"reg", c.loss.reg},
               {"ae", c.loss.ae},
               {"reg_points", c.loss.reg_points},
               {"normalizer", normalizer_name(c.loss.normalizer)},
               {"squared_residual", c.loss.squared_residual}};
  j["train"] = {{"lr", c.train.lr},
                {"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size ? json(*c.train.batch_size) : json(nullptr)},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"eps", c.train.eps},
                {"validation_fraction", c.train.validation_fraction},
                {"grad_clip", c.train.grad_clip},
                {"max_nonfinite", c.train.max_nonfinite}};
  j["autoencoder"] = {{"latent_dim", c.autoencoder.latent_dim},
                      {"hidden_dim", c.autoencoder.hidden_dim},
                      {"hidden_layers", c.autoencoder.hidden_layers},
                      {"warmup_epochs", c.autoencoder.warmup_epochs},
                      {"target_mse", c.autoencoder.target_mse}};
  j["baseline"] = {{"hidden_dim", c.baseline.hidden_dim},
                   {"hidden_layers", c.baseline.hidden_layers},
                   {"glnn_lagrangian", to_string(c.baseline.glnn_lagrangian)}};
  j["newton"] = {{"tol", c.newton.tol},
                 {"max_iters", c.newton.max_iters},
                 {"halvings", c.newton.halvings},
                 {"stall_tol", c.newton.stall_tol}};
  j["rollout"] = {{"steps", c.rollout.steps}};
  j["eval"] = {{"k", c.eval_k}};
  return j;
}

json default_config_json(Task task) { return config_to_json(default_config(task)); }

ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: document must be an object");
  Task task = Task::DoublePendulum;
  if (doc.contains("task")) {
    if (!doc["task"].is_string()) throw ConfigError("config: wrong type for 'task'");
    task = task_from_string(doc["task"].get<std::string>());
  }
  json m = default_config_json(task);
  overlay(m, doc, "");

  ExperimentConfig c;
  try {
    c.task = task;
    c.model = model_from_string(m["model"].get<std::string>());
    c.seed = m["seed"].get<std::uint64_t>();
    c.output_dir = m["output_dir"].get<std::string>();
    c.scheme_kind = scheme_from(m["scheme"]["kind"].get<std::string>());
    c.scheme_k = m["scheme"]["k"].get<int>();

    const json& d = m["data"];
    auto& dc = c.data;
    dc.train_trajectories = d["train_trajectories"].get<int>();
    dc.test_trajectories = d["test_trajectories"].get<int>();
    dc.train_steps = d["train_steps"].get<int>();
    dc.test_steps = d["test_steps"].get<int>();
    dc.h = d["h"].get<double>();
    dc.substeps = d["substeps"].get<int>();
    dc.noise_sigma = d["noise_sigma"].get<double>();
    dc.max_angle = d["max_angle"].get<double>();
    const json& dp = d["double_pendulum"];
    dc.double_pendulum = {dp["m1"].get<double>(), dp["m2"].get<double>(), dp["l1"].get<double>(), dp["l2"].get<double>(),
                          dp["g"].get<double>(),  dp["b1"].get<double>(), dp["b2"].get<double>()};
    const json& cp = d["charged_particle"];
    dc.charged_particle.charge = cp["charge"].get<double>();
    dc.charged_particle.mass = cp["mass"].get<double>();
    dc.charged_particle.damping = cp["damping"].get<double>();
    if (cp["field"].size() != 3) throw ConfigError("config: data.charged_particle.field needs 3 entries");
    for (int i = 0; i < 3; ++i) {
      if (!cp["field"][static_cast<std::size_t>(i)].is_number()) throw ConfigError("config: wrong type for 'data.charged_particle.field'");
      dc.charged_particle.field(i) = cp["field"][static_cast<std::size_t>(i)].get<double>();
    }
    dc.pendulum = {d["pendulum"]["g"].get<double>(), d["pendulum"]["length"].get<double>(),
                   d["pendulum"]["damping"].get<double>()};
    dc.oscillator = {d["oscillator"]["omega"].get<double>(), d["oscillator"]["gamma"].get<double>()};
    dc.csv_train = d["csv_train"].get<std::string>();
    dc.csv_test = d["csv_test"].get<std::string>();
    dc.savgol_window = d["savgol_window"].get<int>();
    dc.savgol_polyorder = d["savgol_polyorder"].get<int>();

    const json& l = m["lagrangian"];
    c.lagrangian.kind = lagrangian_kind_from_string(l["kind"].get<std::string>());
    c.lagrangian.hidden_dim = l["hidden_dim"].get<int>();
    c.lagrangian.hidden_layers = l["hidden_layers"].get<int>();
    c.lagrangian.epsilon = l["epsilon"].get<double>();
    c.lagrangian.potential_uses_velocity = l["potential_uses_velocity"].get<bool>();

    const json& f = m["force"];
    c.force.kind = force_kind_from_string(f["kind"].get<std::string>());
    c.force.hidden_dim = f["hidden_dim"].get<int>();
    c.force.hidden_layers = f["hidden_layers"].get<int>();
    c.force.dropout = f["dropout"].get<double>();

    const json& w = m["loss"];
    c.loss.physics = w["physics"].get<double>();
    c.loss.reg = w["reg"].get<double>();
    c.loss.ae = w["ae"].get<double>();
    c.loss.reg_points = w["reg_points"].get<int>();
    c.loss.normalizer = normalizer_from(w["normalizer"].get<std::string>());
    c.loss.squared_residual = w["squared_residual"].get<bool>();

    const json& t = m["train"];
    c.train.lr = t["lr"].get<double>();
    c.train.epochs = t["epochs"].get<int>();
    c.train.batch_size = t["batch_size"].is_null() ? std::nullopt : std::optional<int>(t["batch_size"].get<int>());
    c.train.beta1 = t["beta1"].get<double>();
    c.train.beta2 = t["beta2"].get<double>();
    c.train.eps = t["eps"].get<double>();
    c.train.validation_fraction = t["validation_fraction"].get<double>();
    c.train.grad_clip = t["grad_clip"].get<double>();
    c.train.max_nonfinite = t["max_nonfinite"].get<int>();

    const json& a = m["autoencoder"];
    c.autoencoder = {a["latent_dim"].get<int>(), a["hidden_dim"].get<int>(), a["hidden_layers"].get<int>(),
                     a["warmup_epochs"].get<int>(), a["target_mse"].get<double>()};
    c.baseline = {m["baseline"]["hidden_dim"].get<int>(), m["baseline"]["hidden_layers"].get<int>(),
                  lagrangian_kind_from_string(m["baseline"]["glnn_lagrangian"].get<std::string>())};
    const json& n = m["newton"];
    c.newton = {n["tol"].get<double>(), n["max_iters"].get<int>(), n["halvings"].get<int>(), n["stall_tol"].get<double>()};
    c.rollout.steps = m["rollout"]["steps"].get<int>();
    c.eval_k = m["eval"]["k"].get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.train.seed = derive_seed(c.seed, 3);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json(read_json(path));
  } catch (const json::exception& e) {
    throw ConfigError("config: cannot parse " + path.string() + ": " + e.what());
  }
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = config_to_json(cfg);
  j.erase("output_dir");
  return fnv1a_hex(j.dump());
}

std::string data_hash(const ExperimentConfig& cfg) {
  const json j = config_to_json(cfg);
  json d = {{"task", j["task"]}, {"seed", j["seed"]}, {"data", j["data"]}};
  return fnv1a_hex(d.dump());
}

std::string model_hash(const ExperimentConfig& cfg) {
  json j = config_to_json(cfg);
  for (const char* k : {"output_dir", "data", "newton", "rollout", "eval"}) j.erase(k);
  j["data_hash"] = data_hash(cfg);
  return fnv1a_hex(j.dump());
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace dlda
