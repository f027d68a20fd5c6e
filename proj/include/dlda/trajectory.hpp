#pragma once

#include <Eigen/Dense>

#include <vector>

namespace dlda {

// Uniformly sampled positions, one column per sample: q is d x (N+1).
struct Trajectory {
  double h = 0.1;
  Eigen::MatrixXd q;
  // True velocities when the generator knows them; never used for training.
  Eigen::MatrixXd v;

  int dim() const { return static_cast<int>(q.rows()); }
  Eigen::Index samples() const { return q.cols(); }
};

using Dataset = std::vector<Trajectory>;

}  // namespace dlda
