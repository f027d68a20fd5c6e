#include "dlda/experiment.hpp"

#include "dlda/baselines.hpp"
#include "dlda/checkpoint.hpp"
#include "dlda/data.hpp"
#include "dlda/error.hpp"
#include "dlda/latent.hpp"
#include "dlda/rollout.hpp"
#include "dlda/trajectory_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace dlda {

namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

int thread_count() {
  const char* env = std::getenv("DLDA_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) throw ConfigError("DLDA_THREADS must be a positive integer");
  return static_cast<int>(std::min<long>(n, 256));
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(i) for i in [0, n); every index writes only its own outputs, so the
// result does not depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string indexed(const std::string& stem, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%04zu.csv", i);
  return stem + buf;
}

fs::path out_dir(const ExperimentConfig& cfg) { return fs::path(cfg.output_dir); }
fs::path data_dir(const ExperimentConfig& cfg) { return out_dir(cfg) / "data"; }
fs::path model_dir(const ExperimentConfig& cfg) { return out_dir(cfg) / "model" / to_string(cfg.model); }
fs::path rollout_dir(const ExperimentConfig& cfg, bool force_on) {
  return out_dir(cfg) / "rollout" / to_string(cfg.model) / (force_on ? "force_on" : "force_off");
}
fs::path eval_dir(const ExperimentConfig& cfg) { return out_dir(cfg) / "eval" / to_string(cfg.model); }
std::string regime(bool force_on) { return force_on ? "force_on" : "force_off"; }

bool is_pixel(const ExperimentConfig& cfg) { return cfg.task == Task::Pixel; }

// ---- data generation ----------------------------------------------------

GenSpec gen_spec(const ExperimentConfig& cfg, int trajectories, int steps, double noise) {
  GenSpec g;
  g.trajectories = trajectories;
  g.steps = steps;
  g.h = cfg.data.h;
  g.substeps = cfg.data.substeps;
  g.noise_sigma = noise;
  return g;
}

Dataset simulate(const ExperimentConfig& cfg, const GenSpec& g, std::uint64_t seed, bool conservative) {
  Rng rng(seed);
  const auto& d = cfg.data;
  switch (cfg.task) {
    case Task::DoublePendulum: {
      auto p = d.double_pendulum;
      if (conservative) p.b1 = p.b2 = 0.0;
      return generate_double_pendulum(g, p, rng, d.max_angle);
    }
    case Task::ChargedParticle: {
      auto p = d.charged_particle;
      if (conservative) p.damping = 0.0;
      return generate_charged_particle(g, p, rng);
    }
    case Task::Oscillator: {
      auto p = d.oscillator;
      if (conservative) p.gamma = 0.0;
      return generate_oscillator(g, p, rng);
    }
    case Task::Pixel: {
      auto p = d.pendulum;
      if (conservative) p.damping = 0.0;
      return generate_pendulum(g, p, rng, d.max_angle);
    }
    case Task::CsvImport: break;
  }
  throw ConfigError("simulate: task has no generator");
}

Dataset frames_of(const Dataset& angles, double noise, Rng* rng) {
  Dataset out;
  for (const auto& a : angles) {
    Trajectory f = render_frames(a);
    if (noise > 0.0) f = add_noise(f, noise, *rng);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<fs::path> csv_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("csv-import: not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("csv-import: no .csv files in " + dir.string());
  return files;
}

Dataset import_csv(const ExperimentConfig& cfg, const std::string& dir) {
  Dataset out;
  for (const auto& f : csv_files(dir)) {
    Trajectory t = read_trajectory_csv(f);
    if (!out.empty() && (t.dim() != out.front().dim() || std::abs(t.h - out.front().h) > 1e-12 * out.front().h))
      throw DimensionError("csv-import: " + f.string() + " differs in dimension or step size");
    if (cfg.data.savgol_window > 0) t = savgol_smooth(t, cfg.data.savgol_window, cfg.data.savgol_polyorder);
    out.push_back(std::move(t));
  }
  return out;
}

json params_json(const ExperimentConfig& cfg) {
  const json j = config_to_json(cfg)["data"];
  switch (cfg.task) {
    case Task::DoublePendulum: return j["double_pendulum"];
    case Task::ChargedParticle: return j["charged_particle"];
    case Task::Pixel: return j["pendulum"];
    case Task::Oscillator: return j["oscillator"];
    case Task::CsvImport: return {{"csv_train", j["csv_train"]}, {"csv_test", j["csv_test"]},
                                  {"savgol_window", j["savgol_window"]}, {"savgol_polyorder", j["savgol_polyorder"]}};
  }
  return json::object();
}

std::string generator_name(Task t) {
  switch (t) {
    case Task::DoublePendulum: return "damped_double_pendulum";
    case Task::ChargedParticle: return "dissipative_charged_particle";
    case Task::Pixel: return "pixel_damped_pendulum";
    case Task::Oscillator: return "damped_oscillator";
    case Task::CsvImport: return "csv_import";
  }
  return "?";
}

// Writes one split; returns file name -> content hash.
json write_split(const fs::path& dir, const Dataset& data, const std::string& stem, bool frames) {
  json files = json::object();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string name = indexed(stem, i);
    const std::string text = frames ? frames_to_csv(data[i].q) : trajectory_to_csv(data[i]);
    write_text(dir / name, text);
    files[name] = fnv1a_hex(text);
  }
  return files;
}

Dataset read_split(const fs::path& dir, const json& files, bool frames, double h, bool allow_nan = false) {
  Dataset out;
  for (auto it = files.begin(); it != files.end(); ++it) {
    const std::string text = read_text(dir / it.key());
    if (fnv1a_hex(text) != it.value().get<std::string>()) throw ConfigError("dataset file changed since gen: " + (dir / it.key()).string());
    Trajectory t;
    if (frames) {
      t.h = h;
      t.q = frames_from_csv(text);
    } else {
      t = trajectory_from_csv(text, allow_nan);
    }
    out.push_back(std::move(t));
  }
  return out;
}

void check_hash(const json& manifest, const char* key, const std::string& expected, const std::string& what) {
  if (!manifest.contains(key) || manifest[key].get<std::string>() != expected) {
    throw ConfigError(what + ": " + key + " mismatch (artifact " +
                      (manifest.contains(key) ? manifest[key].get<std::string>() : std::string("missing")) +
                      ", config " + expected + ")");
  }
}

// ---- models ----------------------------------------------------------------

struct Built {
  ParameterStore store;
  DynamicsModel dynamics;      // dflnn (also the latent dynamics for pixels)
  BaselineModel baseline;      // glnn / node
  Autoencoder ae;              // pixel only
  int dim = 0;
};

LagrangianConfig glnn_lagrangian(const ExperimentConfig& cfg) {
  LagrangianConfig l = cfg.lagrangian;
  l.kind = cfg.baseline.glnn_lagrangian;
  l.hidden_dim = cfg.baseline.hidden_dim;
  l.hidden_layers = cfg.baseline.hidden_layers;
  return l;
}

ForceConfig glnn_force(const ExperimentConfig& cfg) {
  ForceConfig f = cfg.force;
  f.hidden_dim = cfg.baseline.hidden_dim;
  f.hidden_layers = cfg.baseline.hidden_layers;
  return f;
}

Built create_models(const ExperimentConfig& cfg, int dim) {
  Built b;
  b.dim = dim;
  Rng rng(derive_seed(cfg.seed, 2));
  switch (cfg.model) {
    case ModelKind::Dflnn: {
      if (is_pixel(cfg)) {
        b.ae = Autoencoder::create(b.store, "ae",
                                   AutoencoderSpec{kFrameSize, cfg.autoencoder.latent_dim, cfg.autoencoder.hidden_dim,
                                                   cfg.autoencoder.hidden_layers});
      }
      b.dynamics.lagrangian = create_lagrangian(b.store, dim, cfg.lagrangian);
      b.dynamics.force = create_force(b.store, dim, cfg.force);
      if (is_pixel(cfg)) b.ae.init(b.store, rng);
      init_lagrangian(b.dynamics.lagrangian, b.store, rng);
      init_force(b.dynamics.force, b.store, rng);
      break;
    }
    case ModelKind::Glnn: {
      DynamicsModel m{create_lagrangian(b.store, dim, glnn_lagrangian(cfg)), create_force(b.store, dim, glnn_force(cfg))};
      init_lagrangian(m.lagrangian, b.store, rng);
      init_force(m.force, b.store, rng);
      b.baseline = BaselineModel::make_glnn(std::move(m));
      break;
    }
    case ModelKind::Node: {
      b.baseline = BaselineModel::create_node(b.store, dim, cfg.baseline.hidden_dim, cfg.baseline.hidden_layers);
      init_params(b.baseline.field, b.store, rng);
      break;
    }
  }
  return b;
}

Built bind_models(const ExperimentConfig& cfg, ParameterStore store, int dim) {
  Built b;
  b.store = std::move(store);
  b.dim = dim;
  switch (cfg.model) {
    case ModelKind::Dflnn:
      if (is_pixel(cfg)) {
        b.ae = Autoencoder::bind(b.store, "ae",
                                 AutoencoderSpec{kFrameSize, cfg.autoencoder.latent_dim, cfg.autoencoder.hidden_dim,
                                                 cfg.autoencoder.hidden_layers});
      }
      b.dynamics.lagrangian = bind_lagrangian(b.store, dim, cfg.lagrangian);
      b.dynamics.force = bind_force(b.store, dim, cfg.force);
      break;
    case ModelKind::Glnn:
      b.baseline = BaselineModel::make_glnn(
          DynamicsModel{bind_lagrangian(b.store, dim, glnn_lagrangian(cfg)), bind_force(b.store, dim, glnn_force(cfg))});
      break;
    case ModelKind::Node:
      b.baseline = BaselineModel::bind_node(b.store, dim, cfg.baseline.hidden_dim, cfg.baseline.hidden_layers);
      break;
  }
  return b;
}

int data_dim(const ExperimentConfig& cfg, const TaskData& data) {
  if (is_pixel(cfg)) return cfg.autoencoder.latent_dim;
  return static_cast<int>(data.train.front().dim());
}

json manifest_base(const ExperimentConfig& cfg) {
  return {{"task", to_string(cfg.task)}, {"config_hash", config_hash(cfg)}, {"data_hash", data_hash(cfg)}};
}

}  // namespace

// ---- public drivers ---------------------------------------------------------

TaskData generate_task_data(const ExperimentConfig& cfg) {
  cfg.validate();
  TaskData out;
  const auto& d = cfg.data;
  if (cfg.task == Task::CsvImport) {
    out.train = import_csv(cfg, d.csv_train);
    out.test = import_csv(cfg, d.csv_test);
    if (out.train.front().dim() != out.test.front().dim()) throw DimensionError("csv-import: train and test dimensions differ");
    return out;
  }
  const std::uint64_t train_seed = derive_seed(cfg.seed, 0);
  const std::uint64_t test_seed = derive_seed(cfg.seed, 1);
  if (is_pixel(cfg)) {
    out.train_angles = simulate(cfg, gen_spec(cfg, d.train_trajectories, d.train_steps, 0.0), train_seed, false);
    out.test_angles = simulate(cfg, gen_spec(cfg, d.test_trajectories, d.test_steps, 0.0), test_seed, false);
    Rng noise(derive_seed(cfg.seed, 4));
    out.train = frames_of(out.train_angles, d.noise_sigma, &noise);
    out.test = frames_of(out.test_angles, 0.0, nullptr);
    out.test_conservative =
        frames_of(simulate(cfg, gen_spec(cfg, d.test_trajectories, d.test_steps, 0.0), test_seed, true), 0.0, nullptr);
    return out;
  }
  out.train = simulate(cfg, gen_spec(cfg, d.train_trajectories, d.train_steps, d.noise_sigma), train_seed, false);
  out.test = simulate(cfg, gen_spec(cfg, d.test_trajectories, d.test_steps, 0.0), test_seed, false);
  out.test_conservative = simulate(cfg, gen_spec(cfg, d.test_trajectories, d.test_steps, 0.0), test_seed, true);
  return out;
}

fs::path run_gen(const ExperimentConfig& cfg) {
  const TaskData data = generate_task_data(cfg);
  const fs::path dir = data_dir(cfg);
  const bool frames = is_pixel(cfg);
  json m = manifest_base(cfg);
  m["generator"] = generator_name(cfg.task);
  m["seed"] = cfg.seed;
  m["h"] = data.train.front().h;
  m["d"] = frames ? kFrameSize : data.train.front().dim();
  m["N"] = data.train.front().samples() - 1;
  m["test_N"] = data.test.front().samples() - 1;
  m["sigma"] = cfg.data.noise_sigma;
  m["params"] = params_json(cfg);
  const std::string stem = frames ? "frames" : "traj";
  m["files"] = {{"train", write_split(dir / "train", data.train, stem, frames)},
                {"test", write_split(dir / "test", data.test, stem, frames)}};
  if (!data.test_conservative.empty())
    m["files"]["test_conservative"] = write_split(dir / "test_conservative", data.test_conservative, stem, frames);
  if (frames) {
    m["files"]["train_angles"] = write_split(dir / "train_angles", data.train_angles, "traj", false);
    m["files"]["test_angles"] = write_split(dir / "test_angles", data.test_angles, "traj", false);
  }
  write_json(dir / "manifest.json", m);
  return dir;
}

TaskData load_task_data(const ExperimentConfig& cfg) {
  const fs::path dir = data_dir(cfg);
  if (!fs::exists(dir / "manifest.json")) throw ConfigError("no dataset at " + dir.string() + " (run gen first)");
  const json m = read_json(dir / "manifest.json");
  check_hash(m, "data_hash", data_hash(cfg), "dataset");
  const bool frames = is_pixel(cfg);
  const double h = m["h"].get<double>();
  TaskData out;
  const json& f = m["files"];
  out.train = read_split(dir / "train", f["train"], frames, h);
  out.test = read_split(dir / "test", f["test"], frames, h);
  if (f.contains("test_conservative")) out.test_conservative = read_split(dir / "test_conservative", f["test_conservative"], frames, h);
  if (frames) {
    out.train_angles = read_split(dir / "train_angles", f["train_angles"], false, h);
    out.test_angles = read_split(dir / "test_angles", f["test_angles"], false, h);
  }
  if (out.train.empty() || out.test.empty()) throw ConfigError("dataset is empty");
  return out;
}

fs::path run_train(const ExperimentConfig& cfg) {
  cfg.validate();
  const TaskData data = load_task_data(cfg);
  const int dim = data_dim(cfg, data);
  Scheme scheme = cfg.scheme();
  scheme.h = data.train.front().h;
  Built b = create_models(cfg, dim);

  Rng split_rng(derive_seed(cfg.seed, 5));
  auto [train_set, val_set] = split_by_trajectory(data.train, cfg.train.validation_fraction, split_rng);
  json header = manifest_base(cfg);
  header["model"] = to_string(cfg.model);
  header["model_hash"] = model_hash(cfg);
  header["dim"] = dim;
  header["config"] = config_to_json(cfg);
  header["config"].erase("output_dir");  // the same run may live anywhere
  header["train_trajectories"] = train_set.size();
  header["val_trajectories"] = val_set.size();

  TrainReport report;
  switch (cfg.model) {
    case ModelKind::Dflnn: {
      std::vector<std::string> warnings;
      const auto reg = select_reg_points(train_set, cfg.loss.reg_points, split_rng, &warnings);
      json pairs = json::array();
      for (const auto& r : reg) pairs.push_back({r.trajectory, r.index});
      header["reg_points"] = pairs;
      if (is_pixel(cfg)) {
        LatentPipeline p{b.ae, b.dynamics, cfg.loss};
        report = train_latent(cfg.train, train_set, val_set, p, b.store, scheme, reg, cfg.autoencoder.warmup_epochs);
        const double mse = reconstruction_mse(b.ae, b.store, train_set);
        header["ae_mse"] = mse;
        header["ae_target_mse"] = cfg.autoencoder.target_mse;
        report.events.push_back("autoencoder per-pixel mse " + std::to_string(mse));
      } else {
        report = train_dflnn(cfg.train, train_set, val_set, b.dynamics, b.store, cfg.loss, scheme, reg);
      }
      report.events.insert(report.events.begin(), warnings.begin(), warnings.end());
      break;
    }
    case ModelKind::Glnn:
    case ModelKind::Node:
      header["baseline"] = to_string(b.baseline.kind);
      report = train_baseline(cfg.train, train_set, val_set, b.baseline, b.store);
      break;
  }
  header["best_epoch"] = report.best_epoch;
  header["best_val_loss"] = report.best_val_loss;
  header["aborted"] = report.aborted;
  header["events"] = report.events;
  const fs::path dir = model_dir(cfg);
  write_checkpoint(dir / "checkpoint.json", header, b.store);
  report.write_csv(dir / "train_report.csv");
  return dir;
}

fs::path run_rollout(const ExperimentConfig& cfg, bool force_on) {
  cfg.validate();
  const TaskData data = load_task_data(cfg);
  const fs::path ck = model_dir(cfg) / "checkpoint.json";
  if (!fs::exists(ck)) throw ConfigError("no checkpoint at " + ck.string() + " (run train first)");
  Checkpoint c = read_checkpoint(ck);
  check_hash(c.header, "data_hash", data_hash(cfg), "checkpoint");
  check_hash(c.header, "model_hash", model_hash(cfg), "checkpoint");
  const int dim = c.header["dim"].get<int>();
  Built b = bind_models(cfg, std::move(c.params), dim);
  if (is_pixel(cfg) && !(c.header["ae_mse"].get<double>() < cfg.autoencoder.target_mse)) {
    throw ConfigError("autoencoder reconstruction mse " + std::to_string(c.header["ae_mse"].get<double>()) +
                      " is not below the target " + std::to_string(cfg.autoencoder.target_mse));
  }
  if (!force_on && cfg.model == ModelKind::Node) throw ConfigError("a neural ODE has no separate force to switch off");

  const int n = cfg.rollout.steps;
  Scheme scheme = cfg.scheme();
  scheme.h = data.test.front().h;
  const bool frames = is_pixel(cfg);
  const std::size_t count = data.test.size();
  std::vector<MatrixXd> preds(count);
  std::vector<std::string> sidecars(count);
  std::vector<json> status(count);

  parallel_for(count, [&](std::size_t i) {
    const Trajectory& t = data.test[i];
    if (t.samples() < n + 1) throw DimensionError("test trajectory shorter than rollout.steps");
    json st = {{"converged", true}};
    if (cfg.model == ModelKind::Dflnn) {
      VectorXd q0 = t.q.col(0), q1 = t.q.col(1);
      if (frames) {
        q0 = b.ae.encode(b.store, q0).col(0);
        q1 = b.ae.encode(b.store, q1).col(0);
      }
      RolloutResult r;
      try {
        r = rollout(b.dynamics.lagrangian, b.dynamics.force, b.store, q0, q1, n, force_on, scheme, cfg.newton);
      } catch (const RolloutError& e) {
        r = e.partial();
        const Index done = r.q.cols();
        MatrixXd full = MatrixXd::Constant(dim, n + 1, kNaN);
        full.leftCols(done) = r.q;
        r.q = full;
        st = {{"converged", false}, {"failed_step", e.step()}, {"residual_norm", e.residual_norm()}};
      }
      std::string side = "step,iterations,residual_norm,converged\n";
      for (std::size_t s = 0; s < r.iterations.size(); ++s) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%d\n", s + 2, r.iterations[s], r.residual_norms[s],
                      r.converged[s] ? 1 : 0);
        side += buf;
      }
      sidecars[i] = side;
      preds[i] = frames ? MatrixXd(b.ae.decode(b.store, r.q)) : r.q;
      if (frames && !r.q.allFinite()) {
        // decode(NaN) is NaN already; keep it explicit for columns past a failure
        for (Index k = 0; k < r.q.cols(); ++k)
          if (!r.q.col(k).allFinite()) preds[i].col(k).setConstant(kNaN);
      }
    } else {
      BaselineModel model = b.baseline;
      if (!force_on) model.glnn.force = zero_force(dim);
      const BaselineRollout r = baseline_rollout(model, b.store, t.q.col(0), t.q.col(1), n, scheme.h);
      preds[i] = r.q;
      if (r.failed) st = {{"converged", false}, {"failed_step", r.failed_step}, {"reason", "singular velocity Hessian"}};
    }
    status[i] = st;
  });

  const fs::path dir = rollout_dir(cfg, force_on);
  json m = manifest_base(cfg);
  m["model"] = to_string(cfg.model);
  m["model_hash"] = model_hash(cfg);
  m["force_on"] = force_on;
  m["steps"] = n;
  json files = json::object(), newton = json::object(), st = json::array();
  for (std::size_t i = 0; i < count; ++i) {
    Trajectory p;
    p.h = scheme.h;
    p.q = preds[i];
    const std::string name = indexed(frames ? "frames" : "traj", i);
    const std::string text = frames ? frames_to_csv(p.q) : trajectory_to_csv(p);
    write_text(dir / name, text);
    files[name] = fnv1a_hex(text);
    if (!sidecars[i].empty()) {
      const std::string side = indexed("newton", i);
      write_text(dir / side, sidecars[i]);
      newton[side] = fnv1a_hex(sidecars[i]);
    }
    st.push_back(status[i]);
  }
  m["files"] = files;
  m["newton_files"] = newton;
  m["status"] = st;
  write_json(dir / "manifest.json", m);
  return dir;
}

ErrorRow error_row(const std::string& model, const std::string& task, const std::vector<MatrixXd>& preds,
                   const std::vector<MatrixXd>& truths, int k, bool per_pixel) {
  if (preds.size() != truths.size() || preds.empty()) throw DimensionError("error_row: trajectory count mismatch");
  std::vector<double> e;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (k >= preds[i].cols() || k >= truths[i].cols() || preds[i].rows() != truths[i].rows())
      throw DimensionError("error_row: step k outside the trajectories");
    double v = (preds[i].col(k) - truths[i].col(k)).squaredNorm();
    if (!preds[i].col(k).allFinite()) v = kNaN;
    if (per_pixel) v /= static_cast<double>(preds[i].rows());
    e.push_back(v);
  }
  ErrorRow r{model, task, k, 0.0, 0.0};
  for (double v : e) r.mean += v;
  r.mean /= static_cast<double>(e.size());
  for (double v : e) r.std += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(r.std / static_cast<double>(e.size()));
  return r;
}

std::string error_table_csv(const std::vector<ErrorRow>& rows) {
  std::string out = "model,task,k,mean,std\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, ",%d,%.17g,%.17g\n", r.k, r.mean, r.std);
    out += r.model + "," + r.task + buf;
  }
  return out;
}

fs::path run_eval(const ExperimentConfig& cfg, bool force_on) {
  cfg.validate();
  const TaskData data = load_task_data(cfg);
  const fs::path rdir = rollout_dir(cfg, force_on);
  if (!fs::exists(rdir / "manifest.json")) throw ConfigError("no rollouts at " + rdir.string() + " (run rollout first)");
  const json m = read_json(rdir / "manifest.json");
  check_hash(m, "data_hash", data_hash(cfg), "rollout");
  check_hash(m, "model_hash", model_hash(cfg), "rollout");
  const json ck = read_checkpoint(model_dir(cfg) / "checkpoint.json").header;
  check_hash(ck, "model_hash", model_hash(cfg), "checkpoint");

  const Dataset& truth = force_on ? data.test : data.test_conservative;
  if (truth.empty()) throw ConfigError("no conservative ground truth for task " + to_string(cfg.task));
  const bool frames = is_pixel(cfg);
  const Dataset preds = read_split(rdir, m["files"], frames, data.test.front().h, true);
  std::vector<MatrixXd> p, t;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    p.push_back(preds[i].q);
    t.push_back(truth.at(i).q);
  }
  std::vector<ErrorRow> rows;
  for (int k : cfg.eval_k) rows.push_back(error_row(to_string(cfg.model), to_string(cfg.task), p, t, k, frames));
  const fs::path out = eval_dir(cfg) / ("errors_" + regime(force_on) + ".csv");
  write_text(out, error_table_csv(rows));
  json em = manifest_base(cfg);
  em["model_hash"] = model_hash(cfg);
  em["files"] = {{out.filename().string(), fnv1a_hex(error_table_csv(rows))}};
  write_json(eval_dir(cfg) / ("manifest_" + regime(force_on) + ".json"), em);
  return out;
}

}  // namespace dlda
