#include "dlda/latent.hpp"

#include "dlda/error.hpp"

#include <cmath>
#include <memory>

namespace dlda {

using Eigen::Index;
using Eigen::MatrixXd;

void LatentPipeline::validate() const {
  ae.spec.validate();
  weights.validate();
  if (dynamics.lagrangian.dim != ae.spec.latent_dim || dynamics.force.dim != ae.spec.latent_dim) {
    throw DimensionError("latent pipeline: dynamics dimension must equal the latent dimension");
  }
}

LatentBatch make_latent_batch(const Dataset& frames, const Scheme& scheme, const std::vector<RegPoint>& reg_points) {
  const Batch b = make_batch(frames, scheme);
  LatentBatch out;
  out.frames = b.positions;
  out.plan = b.plan;
  out.trajectories = b.trajectories;
  std::vector<Index> start;
  Index c = 0;
  for (const auto& t : frames) {
    start.push_back(c);
    c += t.samples();
  }
  for (const auto& r : reg_points) {
    if (r.trajectory >= frames.size() || r.index + 1 >= frames[r.trajectory].samples()) {
      throw DimensionError("latent: regularisation pair out of range");
    }
    out.reg_a.push_back(start[r.trajectory] + r.index);
    out.reg_b.push_back(start[r.trajectory] + r.index + 1);
  }
  return out;
}

LatentLossParts latent_loss(const LatentPipeline& pipeline, ParamSource& params, const LatentBatch& batch,
                            DropoutState* dropout) {
  const auto& ae = pipeline.ae;
  const auto& w = pipeline.weights;
  if (batch.frames.rows() != ae.spec.data_dim) throw DimensionError("latent_loss: frame size mismatch");
  ad::Tape& tape = params.tape();
  LatentLossParts out;
  const ad::Var x = tape.constant(batch.frames);
  const ad::Var z = ae.encoder.forward(params, ad::Jet(x, 0, 0)).value();
  const ad::Var rec = ae.decoder.forward(params, ad::Jet(z, 0, 0)).value();
  const ad::Var err = ad::sum(ad::square(ad::sub(rec, x)));
  const double samples = static_cast<double>(batch.frames.cols());
  out.pixel_mse = err.scalar() / (samples * static_cast<double>(ae.spec.data_dim));

  const double ratio = static_cast<double>(ae.spec.data_dim) / ae.spec.latent_dim;
  out.ae = ad::scale(err, w.ae * ratio / samples);
  out.total = out.ae;
  if (w.physics > 0.0 && batch.plan.num_windows > 0) {
    const ad::Var phys = physics_sum(pipeline.dynamics, params, z, batch.plan, w.squared_residual, dropout);
    out.physics = ad::scale(phys, w.physics / static_cast<double>(batch.plan.num_windows));
    out.total = ad::add(out.total, out.physics);
  }
  if (!batch.reg_a.empty()) {
    const ad::Var lad = reg_logabsdet(pipeline.dynamics.lagrangian, params, ad::gather_cols(z, batch.reg_a),
                                      ad::gather_cols(z, batch.reg_b), batch.plan.scheme.h);
    out.logabsdet = lad.value();
    if (w.reg > 0.0) {
      out.reg = ad::scale(ad::sum(ad::abs(lad)), w.reg / static_cast<double>(batch.reg_a.size()));
      out.total = ad::add(out.total, out.reg);
    }
  }
  return out;
}

double latent_total_loss(const LatentPipeline& pipeline, const ParameterStore& params, const Dataset& frames,
                         const Scheme& scheme, const std::vector<RegPoint>& reg_points) {
  pipeline.validate();
  const LatentBatch b = make_latent_batch(frames, scheme, reg_points);
  ad::Tape tape;
  ParamSource src(tape, params, false);
  return latent_loss(pipeline, src, b).total.scalar();
}

double reconstruction_mse(const Autoencoder& ae, const ParameterStore& params, const Dataset& frames) {
  double sum = 0.0;
  Index count = 0;
  for (const auto& t : frames) {
    const MatrixXd rec = ae.decode(params, ae.encode(params, t.q));
    sum += (rec - t.q).squaredNorm();
    count += t.q.size();
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

TrainReport train_latent(const TrainConfig& cfg, const Dataset& train_frames, const Dataset& val_frames,
                         const LatentPipeline& pipeline, ParameterStore& params, const Scheme& scheme,
                         const std::vector<RegPoint>& reg_points, int warmup_epochs) {
  pipeline.validate();
  auto tb = std::make_shared<LatentBatch>(make_latent_batch(train_frames, scheme, reg_points));
  // Validation pairs index the training set, so validation uses no reg pairs
  // of its own; the fixed training pairs are re-encoded instead.
  auto vb = std::make_shared<LatentBatch>(make_latent_batch(val_frames.empty() ? train_frames : val_frames, scheme, {}));
  auto record = [](StepContext& ctx, const LatentLossParts& p) {
    ctx.metrics["pixel_mse"] = p.pixel_mse;
    if (p.logabsdet.size() > 0) ctx.metrics["min_abs_det_s"] = std::exp(p.logabsdet.minCoeff());
  };

  TrainReport warm;
  if (warmup_epochs > 0) {
    LatentPipeline ae_only = pipeline;
    ae_only.weights.physics = 0.0;
    ae_only.weights.reg = 0.0;
    TrainProblem p;
    p.train_loss = [=](ParamSource& src, StepContext& ctx) {
      const auto parts = latent_loss(ae_only, src, *tb);
      record(ctx, parts);
      return parts.total;
    };
    p.val_loss = [=](ParamSource& src, StepContext&) { return latent_loss(ae_only, src, *vb).total; };
    TrainConfig wc = cfg;
    wc.epochs = warmup_epochs;
    warm = train_loop(params, p, wc);
  }

  TrainProblem p;
  p.dropout_rate = pipeline.dynamics.force.dropout_rate();
  p.train_loss = [=](ParamSource& src, StepContext& ctx) {
    const auto parts = latent_loss(pipeline, src, *tb, ctx.dropout);
    record(ctx, parts);
    return parts.total;
  };
  p.val_loss = [=](ParamSource& src, StepContext&) {
    LatentBatch v = *vb;
    auto parts = latent_loss(pipeline, src, v);
    ad::Var total = parts.total;
    if (!tb->reg_a.empty() && pipeline.weights.reg > 0.0) {
      // Same fixed training pairs as the training loss.
      ad::Tape& tape = src.tape();
      const ad::Var x = tape.constant(tb->frames);
      const ad::Var z = pipeline.ae.encoder.forward(src, ad::Jet(x, 0, 0)).value();
      const ad::Var lad = reg_logabsdet(pipeline.dynamics.lagrangian, src, ad::gather_cols(z, tb->reg_a),
                                        ad::gather_cols(z, tb->reg_b), scheme.h);
      total = ad::add(total, ad::scale(ad::sum(ad::abs(lad)), pipeline.weights.reg / static_cast<double>(tb->reg_a.size())));
    }
    return total;
  };
  TrainReport report = train_loop(params, p, cfg);
  if (warmup_epochs > 0) {
    report.events.insert(report.events.begin(), "autoencoder warm-up: " + std::to_string(warmup_epochs) + " epochs");
    report.events.insert(report.events.end(), warm.events.begin(), warm.events.end());
  }
  return report;
}

MatrixXd latent_rollout(const LatentPipeline& pipeline, const ParameterStore& params, const Eigen::VectorXd& frame0,
                        const Eigen::VectorXd& frame1, int n, bool force_on, const Scheme& scheme,
                        const NewtonConfig& cfg) {
  pipeline.validate();
  if (frame0.size() != pipeline.ae.spec.data_dim || frame1.size() != pipeline.ae.spec.data_dim) {
    throw DimensionError("latent_rollout: frame size mismatch");
  }
  const Eigen::VectorXd z0 = pipeline.ae.encode(params, frame0).col(0);
  const Eigen::VectorXd z1 = pipeline.ae.encode(params, frame1).col(0);
  const RolloutResult r =
      rollout(pipeline.dynamics.lagrangian, pipeline.dynamics.force, params, z0, z1, n, force_on, scheme, cfg);
  return pipeline.ae.decode(params, r.q);
}

}  // namespace dlda
