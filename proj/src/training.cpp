#include "dlda/training.hpp"

#include "dlda/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

namespace dlda {

using Eigen::Index;

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw ConfigError("train: lr must be >= 0");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size && *batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("train: betas must lie in [0, 1)");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) throw ConfigError("train: validation_fraction must lie in [0, 1)");
  if (grad_clip < 0.0) throw ConfigError("train: grad_clip must be >= 0");
  if (max_nonfinite < 1) throw ConfigError("train: max_nonfinite must be >= 1");
}

bool adam_step(ParameterStore& params, const Eigen::VectorXd& grad, AdamState& state, const TrainConfig& cfg) {
  const Index n = static_cast<Index>(params.size());
  if (grad.size() != n) throw DimensionError("adam_step: gradient size mismatch");
  if (!grad.allFinite()) return false;
  if (state.m.size() != n) {
    state.m = Eigen::VectorXd::Zero(n);
    state.v = Eigen::VectorXd::Zero(n);
    state.t = 0;
  }
  Eigen::VectorXd g = grad;
  if (cfg.grad_clip > 0.0) {
    const double norm = g.norm();
    if (norm > cfg.grad_clip) g *= cfg.grad_clip / norm;
  }
  ++state.t;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  auto theta = params.flat();
  theta.array() -= cfg.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.eps);
  return true;
}

std::vector<RegPoint> select_reg_points(const Dataset& data, int r, Rng& rng, std::vector<std::string>* warnings) {
  if (r < 0) throw ConfigError("select_reg_points: R must be >= 0");
  std::vector<std::pair<std::size_t, Index>> pairs;
  for (std::size_t t = 0; t < data.size(); ++t)
    for (Index i = 0; i + 1 < data[t].samples(); ++i) pairs.emplace_back(t, i);
  std::vector<std::size_t> chosen;
  if (static_cast<std::size_t>(r) >= pairs.size()) {
    if (static_cast<std::size_t>(r) > pairs.size() && warnings != nullptr) {
      warnings->push_back("requested " + std::to_string(r) + " regularisation pairs but only " +
                          std::to_string(pairs.size()) + " exist; using all");
    }
    chosen.resize(pairs.size());
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  } else {
    // Partial Fisher-Yates.
    std::vector<std::size_t> idx(pairs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (int k = 0; k < r; ++k) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), idx.size() - 1);
      std::swap(idx[static_cast<std::size_t>(k)], idx[pick(rng)]);
    }
    chosen.assign(idx.begin(), idx.begin() + r);
  }
  std::vector<RegPoint> out;
  for (std::size_t c : chosen) {
    const auto [t, i] = pairs[c];
    out.push_back({t, i, data[t].q.col(i), data[t].q.col(i + 1)});
  }
  return out;
}

std::pair<Dataset, Dataset> split_by_trajectory(const Dataset& data, double validation_fraction, Rng& rng) {
  if (data.empty()) throw DimensionError("split: empty dataset");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(data.size())));
  if (validation_fraction > 0.0 && n_val == 0 && data.size() > 1) n_val = 1;
  n_val = std::min(n_val, data.size() - 1);
  std::set<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  Dataset tr, va;
  for (std::size_t i = 0; i < data.size(); ++i) (val.count(i) ? va : tr).push_back(data[i]);
  return {tr, va};
}

std::string TrainReport::to_csv() const {
  std::set<std::string> keys;
  for (const auto& e : epochs)
    for (const auto& [k, _] : e.metrics) keys.insert(k);
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_loss,val_loss";
  for (const auto& k : keys) os << "," << k;
  os << "\n";
  for (const auto& e : epochs) {
    os << e.epoch << "," << e.train_loss << "," << e.val_loss;
    for (const auto& k : keys) {
      const auto it = e.metrics.find(k);
      os << ",";
      if (it != e.metrics.end()) os << it->second;
    }
    os << "\n";
  }
  return os.str();
}

void TrainReport::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_csv();
}

TrainReport train_loop(ParameterStore& params, const TrainProblem& problem, const TrainConfig& cfg) {
  cfg.validate();
  if (!problem.train_loss) throw ConfigError("train: no loss");
  TrainReport report;
  report.best_val_loss = std::numeric_limits<double>::infinity();
  Rng rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
  DropoutState dropout{problem.dropout_rate, Rng(cfg.seed ^ 0x14057b7ef767814fULL), false};
  AdamState adam;
  ParameterStore best = params;
  int bad_streak = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;

    StepContext vctx;
    const LossBuilder& vb = problem.val_loss ? problem.val_loss : problem.train_loss;
    {
      ad::Tape tape;
      ParamSource src(tape, params, false);
      rec.val_loss = vb(src, vctx).scalar();
    }
    // Validation is measured before this epoch's updates, so the snapshot
    // belongs to the same parameters.
    if (std::isfinite(rec.val_loss) && rec.val_loss < report.best_val_loss) {
      report.best_val_loss = rec.val_loss;
      report.best_epoch = epoch;
      best = params;
    }

    double train_sum = 0.0;
    bool finite = true;
    for (int s = 0; s < problem.steps_per_epoch; ++s) {
      StepContext ctx;
      ctx.training = true;
      ctx.rng = &rng;
      dropout.training = true;
      ctx.dropout = &dropout;
      ad::Tape tape;
      ParamSource src(tape, params, true);
      const ad::Var loss = problem.train_loss(src, ctx);
      dropout.training = false;
      if (loss.rows() != 1 || loss.cols() != 1) throw DimensionError("train: loss is not scalar");
      const double value = loss.scalar();
      for (const auto& [k, v] : ctx.metrics) rec.metrics[k] = v;
      if (!std::isfinite(value)) {
        finite = false;
        report.events.push_back("epoch " + std::to_string(epoch) + ": non-finite loss, step skipped");
        train_sum = value;
        break;
      }
      tape.backward(loss);
      if (!adam_step(params, src.gradient(), adam, cfg)) {
        finite = false;
        report.events.push_back("epoch " + std::to_string(epoch) + ": non-finite gradient, step skipped");
      }
      train_sum += value;
    }
    rec.train_loss = finite ? train_sum / problem.steps_per_epoch : train_sum;

    report.epochs.push_back(std::move(rec));

    bad_streak = finite ? 0 : bad_streak + 1;
    if (bad_streak >= cfg.max_nonfinite) {
      report.aborted = true;
      report.events.push_back("aborted after " + std::to_string(bad_streak) + " consecutive non-finite epochs");
      break;
    }
  }
  if (report.best_epoch >= 0) params = best;
  return report;
}

TrainReport train_dflnn(const TrainConfig& cfg, const Dataset& train_set, const Dataset& val_set,
                        const DynamicsModel& model, ParameterStore& params, const LossWeights& weights,
                        const Scheme& scheme, const std::vector<RegPoint>& reg_points) {
  weights.validate();
  auto train_batch = std::make_shared<Batch>(make_batch(train_set, scheme));
  auto val_batch = std::make_shared<Batch>(make_batch(val_set.empty() ? train_set : val_set, scheme));
  auto reg = std::make_shared<RegSet>(make_reg_set(reg_points, scheme.h));
  const Index windows = train_batch->plan.num_windows;

  TrainProblem problem;
  problem.dropout_rate = model.force.dropout_rate();
  auto record = [](StepContext& ctx, const LossParts& parts) {
    if (parts.logabsdet.size() > 0) ctx.metrics["min_abs_det_s"] = std::exp(parts.logabsdet.minCoeff());
    if (parts.physics) ctx.metrics["physics"] = parts.physics.scalar();
    if (parts.reg) ctx.metrics["reg"] = parts.reg.scalar();
  };
  if (cfg.batch_size && *cfg.batch_size < windows) {
    const int bs = *cfg.batch_size;
    problem.steps_per_epoch = static_cast<int>((windows + bs - 1) / bs);
    problem.train_loss = [=](ParamSource& src, StepContext& ctx) {
      std::vector<Index> pick(static_cast<std::size_t>(windows));
      std::iota(pick.begin(), pick.end(), Index{0});
      std::shuffle(pick.begin(), pick.end(), *ctx.rng);
      pick.resize(static_cast<std::size_t>(bs));
      Batch sub = *train_batch;
      for (std::size_t s = 0; s < sub.plan.window_src.size(); ++s) {
        std::vector<Index> w;
        for (Index i : pick) w.push_back(train_batch->plan.window_src[s][static_cast<std::size_t>(i)]);
        sub.plan.window_src[s] = std::move(w);
      }
      sub.plan.num_windows = bs;
      LossWeights wb = weights;
      // Rescale so a batch estimates the full-data physics term.
      wb.physics *= static_cast<double>(windows) / bs;
      const LossParts parts = dflnn_loss(model, src, sub, *reg, wb, ctx.dropout);
      record(ctx, parts);
      return parts.total;
    };
  } else {
    problem.train_loss = [=](ParamSource& src, StepContext& ctx) {
      const LossParts parts = dflnn_loss(model, src, *train_batch, *reg, weights, ctx.dropout);
      record(ctx, parts);
      return parts.total;
    };
  }
  problem.val_loss = [=](ParamSource& src, StepContext&) {
    return dflnn_loss(model, src, *val_batch, *reg, weights, nullptr).total;
  };
  return train_loop(params, problem, cfg);
}

TrainOutcome train(const TrainConfig& cfg, const Dataset& data, const DynamicsModel& model, ParameterStore& params,
                   const LossWeights& weights, const Scheme& scheme) {
  cfg.validate();
  Rng rng(cfg.seed);
  auto [tr, va] = split_by_trajectory(data, cfg.validation_fraction, rng);
  TrainOutcome out;
  std::vector<std::string> warnings;
  out.reg_points = select_reg_points(tr, weights.reg_points, rng, &warnings);
  out.train_trajectories = tr.size();
  out.val_trajectories = va.size();
  out.report = train_dflnn(cfg, tr, va, model, params, weights, scheme, out.reg_points);
  out.report.events.insert(out.report.events.begin(), warnings.begin(), warnings.end());
  return out;
}

}  // namespace dlda
