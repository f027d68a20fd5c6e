#pragma once

#include "dlda/networks.hpp"
#include "dlda/objective.hpp"
#include "dlda/rollout.hpp"
#include "dlda/training.hpp"

#include <Eigen/Dense>

namespace dlda {

struct LatentPipeline {
  Autoencoder ae;
  DynamicsModel dynamics;  // on the latent dimension
  LossWeights weights;     // weights.ae is the reconstruction weight

  void validate() const;
};

struct LatentBatch {
  Eigen::MatrixXd frames;  // D x samples
  WindowPlan plan;
  std::vector<Eigen::Index> reg_a;  // sample columns of q_r
  std::vector<Eigen::Index> reg_b;  // sample columns of q_{r+1}
  Eigen::Index trajectories = 0;
};

LatentBatch make_latent_batch(const Dataset& frames, const Scheme& scheme, const std::vector<RegPoint>& reg_points);

struct LatentLossParts {
  ad::Var total;
  ad::Var physics;
  ad::Var reg;
  ad::Var ae;
  Eigen::RowVectorXd logabsdet;
  double pixel_mse = 0.0;  // mean squared reconstruction error per pixel
};

// Physics normalised by N_T(N-1), reconstruction by N_T(N+1).
LatentLossParts latent_loss(const LatentPipeline& pipeline, ParamSource& params, const LatentBatch& batch,
                            DropoutState* dropout = nullptr);

double latent_total_loss(const LatentPipeline& pipeline, const ParameterStore& params, const Dataset& frames,
                         const Scheme& scheme, const std::vector<RegPoint>& reg_points);

// Mean per-pixel squared reconstruction error over all frames.
double reconstruction_mse(const Autoencoder& ae, const ParameterStore& params, const Dataset& frames);

// Joint training. warmup_epochs first fit the autoencoder alone.
TrainReport train_latent(const TrainConfig& cfg, const Dataset& train_frames, const Dataset& val_frames,
                         const LatentPipeline& pipeline, ParameterStore& params, const Scheme& scheme,
                         const std::vector<RegPoint>& reg_points, int warmup_epochs = 0);

// Encodes the two seed frames, rolls out in latent space and decodes every
// latent state: (D x (N+1)).
Eigen::MatrixXd latent_rollout(const LatentPipeline& pipeline, const ParameterStore& params,
                               const Eigen::VectorXd& frame0, const Eigen::VectorXd& frame1, int n, bool force_on,
                               const Scheme& scheme, const NewtonConfig& cfg = {});

}  // namespace dlda
