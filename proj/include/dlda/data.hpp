#pragma once

#include "dlda/networks.hpp"
#include "dlda/trajectory.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>

namespace dlda {

using Ode = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct DoublePendulumParams {
  double m1 = 1.0, m2 = 1.0;
  double l1 = 1.0, l2 = 1.0;
  double g = 9.81;
  double b1 = 0.5, b2 = 0.5;
  void validate() const;
};

struct ChargedParticleParams {
  double charge = 1.0;
  double mass = 1.0;
  double damping = 0.1;
  Eigen::Vector3d field{0.0, 0.0, 1.0};
  void validate() const;
};

// theta'' = -(g/l) sin theta - b theta'
struct PendulumParams {
  double g = 9.81;
  double length = 1.0;
  double damping = 0.5;
  void validate() const;
};

// q'' = -omega^2 q - gamma q'
struct OscillatorParams {
  double omega = 1.0;
  double gamma = 0.1;
};

// state (theta1, theta2, theta1', theta2')
Eigen::VectorXd dp_ode(const Eigen::VectorXd& state, const DoublePendulumParams& p);
double dp_energy(const Eigen::VectorXd& state, const DoublePendulumParams& p);
// state (x, y, z, vx, vy, vz)
Eigen::VectorXd cp_ode(const Eigen::VectorXd& state, const ChargedParticleParams& p);
Eigen::VectorXd pendulum_ode(const Eigen::VectorXd& state, const PendulumParams& p);
Eigen::VectorXd oscillator_ode(const Eigen::VectorXd& state, const OscillatorParams& p);

// Classical RK4 with step h/substeps, sampled every h for n intervals. The
// first `dim` state entries are positions, the next `dim` velocities. A
// non-finite state stops the integration and returns what was produced.
Trajectory integrate(const Ode& ode, const Eigen::VectorXd& x0, double h, int substeps, int n, int dim);

Trajectory add_noise(const Trajectory& traj, double sigma, Rng& rng);
// sqrt(1e-2 h)
inline double default_noise_sigma(double h) { return std::sqrt(1e-2 * h); }

// Least-squares polynomial smoothing; edge samples use the fit of the
// nearest full window.
Trajectory savgol_smooth(const Trajectory& traj, int window, int polyorder);
Eigen::VectorXd savgol_smooth(const Eigen::VectorXd& x, int window, int polyorder);

constexpr int kFrameHeight = 50;
constexpr int kFrameWidth = 30;
constexpr int kFrameSize = kFrameHeight * kFrameWidth;

// Anti-aliased rod and bob hanging from the top centre; row-major, values
// in [0, 1].
Eigen::VectorXd render_pendulum(double theta);

// ---- task generators ----------------------------------------------------

struct GenSpec {
  int trajectories = 64;
  int steps = 20;          // N: samples are N+1
  double h = 0.1;
  int substeps = 100;
  double noise_sigma = 0.0;  // on positions
};

Dataset generate_double_pendulum(const GenSpec& spec, const DoublePendulumParams& p, Rng& rng,
                                 double max_angle = 3.14159265358979323846 / 6);
Dataset generate_charged_particle(const GenSpec& spec, const ChargedParticleParams& p, Rng& rng);
Dataset generate_oscillator(const GenSpec& spec, const OscillatorParams& p, Rng& rng);
// Angles only; use render_frames for pixels.
Dataset generate_pendulum(const GenSpec& spec, const PendulumParams& p, Rng& rng,
                          double max_angle = 3.14159265358979323846 / 6);
// Rendered frames of every sample, (kFrameSize x samples).
Trajectory render_frames(const Trajectory& angles);

}  // namespace dlda
