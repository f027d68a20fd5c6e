#include "dlda/data.hpp"

#include "dlda/error.hpp"

#include <algorithm>
#include <cmath>

namespace dlda {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void DoublePendulumParams::validate() const {
  if (!(m1 > 0 && m2 > 0 && l1 > 0 && l2 > 0)) throw ConfigError("double pendulum: masses and lengths must be > 0");
  if (b1 < 0 || b2 < 0) throw ConfigError("double pendulum: damping must be >= 0");
}

void ChargedParticleParams::validate() const {
  if (!(mass > 0)) throw ConfigError("charged particle: mass must be > 0");
  if (damping < 0) throw ConfigError("charged particle: damping must be >= 0");
}

void PendulumParams::validate() const {
  if (!(length > 0)) throw ConfigError("pendulum: length must be > 0");
  if (damping < 0) throw ConfigError("pendulum: damping must be >= 0");
}

VectorXd dp_ode(const VectorXd& s, const DoublePendulumParams& p) {
  if (s.size() != 4) throw DimensionError("dp_ode: state must have 4 entries");
  const double t1 = s(0), t2 = s(1), w1 = s(2), w2 = s(3);
  const double den = 2 * p.m1 + p.m2 - p.m2 * std::cos(2 * t1 - 2 * t2);
  const double a1 = (-p.g * (2 * p.m1 + p.m2) * std::sin(t1) - p.m2 * p.g * std::sin(t1 - 2 * t2) -
                     2 * std::sin(t1 - t2) * p.m2 * (w2 * w2 * p.l2 + w1 * w1 * p.l1 * std::cos(t1 - t2))) /
                        (p.l1 * den) -
                    p.b1 * w1;
  const double a2 = (2 * std::sin(t1 - t2) *
                     (w1 * w1 * p.l1 * (p.m1 + p.m2) + p.g * (p.m1 + p.m2) * std::cos(t1) +
                      w2 * w2 * p.l2 * p.m2 * std::cos(t1 - t2))) /
                        (p.l2 * den) -
                    p.b2 * w2;
  VectorXd out(4);
  out << w1, w2, a1, a2;
  return out;
}

double dp_energy(const VectorXd& s, const DoublePendulumParams& p) {
  const double t1 = s(0), t2 = s(1), w1 = s(2), w2 = s(3);
  const double kin = 0.5 * (p.m1 + p.m2) * p.l1 * p.l1 * w1 * w1 + 0.5 * p.m2 * p.l2 * p.l2 * w2 * w2 +
                     p.m2 * p.l1 * p.l2 * w1 * w2 * std::cos(t1 - t2);
  const double pot = -(p.m1 + p.m2) * p.g * p.l1 * std::cos(t1) - p.m2 * p.g * p.l2 * std::cos(t2);
  return kin + pot;
}

VectorXd cp_ode(const VectorXd& s, const ChargedParticleParams& p) {
  if (s.size() != 6) throw DimensionError("cp_ode: state must have 6 entries");
  const double vx = s(3), vy = s(4), vz = s(5);
  const double k = p.charge / p.mass, c = p.damping / p.mass;
  const auto& b = p.field;
  VectorXd out(6);
  out << vx, vy, vz, k * (vy * b.z() - vz * b.y()) - c * vx, k * (vz * b.x() - vx * b.z()) - c * vy,
      k * (vx * b.y() - vy * b.x()) - c * vz;
  return out;
}

VectorXd pendulum_ode(const VectorXd& s, const PendulumParams& p) {
  VectorXd out(2);
  out << s(1), -(p.g / p.length) * std::sin(s(0)) - p.damping * s(1);
  return out;
}

VectorXd oscillator_ode(const VectorXd& s, const OscillatorParams& p) {
  VectorXd out(2);
  out << s(1), -p.omega * p.omega * s(0) - p.gamma * s(1);
  return out;
}

Trajectory integrate(const Ode& ode, const VectorXd& x0, double h, int substeps, int n, int dim) {
  if (substeps < 1) throw ConfigError("integrate: substeps must be >= 1");
  if (n < 0) throw ConfigError("integrate: n must be >= 0");
  if (!(h > 0)) throw ConfigError("integrate: h must be > 0");
  if (dim < 1 || 2 * dim > x0.size()) throw DimensionError("integrate: bad position dimension");
  const double dt = h / substeps;
  MatrixXd states(x0.size(), n + 1);
  states.col(0) = x0;
  VectorXd x = x0;
  Index done = 1;
  for (int k = 1; k <= n; ++k) {
    for (int s = 0; s < substeps; ++s) {
      const VectorXd k1 = ode(x);
      const VectorXd k2 = ode(x + 0.5 * dt * k1);
      const VectorXd k3 = ode(x + 0.5 * dt * k2);
      const VectorXd k4 = ode(x + dt * k3);
      x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!x.allFinite()) break;
    states.col(k) = x;
    done = k + 1;
  }
  Trajectory t;
  t.h = h;
  t.q = states.topLeftCorner(dim, done);
  t.v = states.block(dim, 0, dim, done);
  return t;
}

Trajectory add_noise(const Trajectory& traj, double sigma, Rng& rng) {
  if (sigma < 0) throw ConfigError("add_noise: sigma must be >= 0");
  Trajectory out = traj;
  if (sigma == 0.0) return out;
  std::normal_distribution<double> noise(0.0, sigma);
  for (Index j = 0; j < out.q.cols(); ++j)
    for (Index i = 0; i < out.q.rows(); ++i) out.q(i, j) += noise(rng);
  return out;
}

VectorXd savgol_smooth(const VectorXd& x, int window, int polyorder) {
  if (window < 1 || window % 2 == 0) throw ConfigError("savgol: window must be a positive odd integer");
  if (polyorder < 0 || polyorder >= window) throw ConfigError("savgol: polyorder must be in [0, window)");
  const Index n = x.size();
  if (n < window) throw ConfigError("savgol: signal shorter than window");
  const int half = window / 2;
  // Hat matrix of the polynomial fit on one window, scaled abscissa.
  MatrixXd v(window, polyorder + 1);
  for (int j = 0; j < window; ++j) {
    const double t = half > 0 ? static_cast<double>(j - half) / half : 0.0;
    double p = 1.0;
    for (int k = 0; k <= polyorder; ++k, p *= t) v(j, k) = p;
  }
  const MatrixXd hat = v * v.colPivHouseholderQr().solve(MatrixXd::Identity(window, window));
  VectorXd out(n);
  for (Index i = 0; i < n; ++i) {
    const Index s = std::clamp<Index>(i - half, 0, n - window);
    out(i) = hat.row(i - s).dot(x.segment(s, window));
  }
  return out;
}

Trajectory savgol_smooth(const Trajectory& traj, int window, int polyorder) {
  Trajectory out = traj;
  for (Index r = 0; r < traj.q.rows(); ++r) out.q.row(r) = savgol_smooth(VectorXd(traj.q.row(r).transpose()), window, polyorder).transpose();
  return out;
}

namespace {

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  const double t = len2 > 0 ? std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0) : 0.0;
  const double cx = ax + t * dx - px, cy = ay + t * dy - py;
  return std::sqrt(cx * cx + cy * cy);
}

}  // namespace

VectorXd render_pendulum(double theta) {
  constexpr double pivot_x = (kFrameWidth - 1) / 2.0;
  constexpr double pivot_y = 8.0;
  constexpr double length = 30.0;
  constexpr double rod_half_width = 3.0;
  constexpr double bob_radius = 4.0;
  const double ex = pivot_x + length * std::sin(theta);
  const double ey = pivot_y + length * std::cos(theta);
  VectorXd img(kFrameSize);
  for (int r = 0; r < kFrameHeight; ++r) {
    for (int c = 0; c < kFrameWidth; ++c) {
      const double rod = rod_half_width + 0.5 - segment_distance(c, r, pivot_x, pivot_y, ex, ey);
      const double bob = bob_radius + 0.5 - std::hypot(c - ex, r - ey);
      img(r * kFrameWidth + c) = std::clamp(std::max(rod, bob), 0.0, 1.0);
    }
  }
  return img;
}

namespace {

Trajectory finish(Trajectory t, const GenSpec& spec, Rng& rng) {
  if (t.samples() != spec.steps + 1) throw DimensionError("generator: integration produced non-finite states");
  return spec.noise_sigma > 0 ? add_noise(t, spec.noise_sigma, rng) : t;
}

void check(const GenSpec& s) {
  if (s.trajectories < 1 || s.steps < 1 || s.substeps < 1 || !(s.h > 0) || s.noise_sigma < 0)
    throw ConfigError("generator: invalid dataset spec");
}

}  // namespace

Dataset generate_double_pendulum(const GenSpec& spec, const DoublePendulumParams& p, Rng& rng, double max_angle) {
  check(spec);
  p.validate();
  std::uniform_real_distribution<double> angle(-max_angle, max_angle);
  Dataset out;
  for (int i = 0; i < spec.trajectories; ++i) {
    VectorXd x0 = VectorXd::Zero(4);
    x0(0) = angle(rng);
    x0(1) = angle(rng);
    out.push_back(finish(integrate([&](const VectorXd& s) { return dp_ode(s, p); }, x0, spec.h, spec.substeps, spec.steps, 2),
                         spec, rng));
  }
  return out;
}

Dataset generate_charged_particle(const GenSpec& spec, const ChargedParticleParams& p, Rng& rng) {
  check(spec);
  p.validate();
  std::uniform_real_distribution<double> pos(-1.0, 1.0), speed(0.5, 1.5);
  std::normal_distribution<double> dir(0.0, 1.0);
  Dataset out;
  for (int i = 0; i < spec.trajectories; ++i) {
    VectorXd x0(6);
    x0(0) = pos(rng);
    x0(1) = pos(rng);
    x0(2) = pos(rng);
    Eigen::Vector3d u(dir(rng), dir(rng), dir(rng));
    u = u.normalized() * speed(rng);
    x0.tail(3) = u;
    out.push_back(finish(integrate([&](const VectorXd& s) { return cp_ode(s, p); }, x0, spec.h, spec.substeps, spec.steps, 3),
                         spec, rng));
  }
  return out;
}

Dataset generate_oscillator(const GenSpec& spec, const OscillatorParams& p, Rng& rng) {
  check(spec);
  std::uniform_real_distribution<double> amp(0.5, 1.5), phase(0.0, 2.0 * 3.14159265358979323846);
  Dataset out;
  for (int i = 0; i < spec.trajectories; ++i) {
    const double a = amp(rng), ph = phase(rng);
    VectorXd x0(2);
    x0 << a * std::cos(ph), -a * p.omega * std::sin(ph);
    out.push_back(
        finish(integrate([&](const VectorXd& s) { return oscillator_ode(s, p); }, x0, spec.h, spec.substeps, spec.steps, 1),
               spec, rng));
  }
  return out;
}

Dataset generate_pendulum(const GenSpec& spec, const PendulumParams& p, Rng& rng, double max_angle) {
  check(spec);
  p.validate();
  std::uniform_real_distribution<double> angle(-max_angle, max_angle);
  Dataset out;
  for (int i = 0; i < spec.trajectories; ++i) {
    VectorXd x0 = VectorXd::Zero(2);
    x0(0) = angle(rng);
    out.push_back(
        finish(integrate([&](const VectorXd& s) { return pendulum_ode(s, p); }, x0, spec.h, spec.substeps, spec.steps, 1),
               spec, rng));
  }
  return out;
}

Trajectory render_frames(const Trajectory& angles) {
  if (angles.dim() != 1) throw DimensionError("render_frames: expects a single angle");
  Trajectory out;
  out.h = angles.h;
  out.q.resize(kFrameSize, angles.samples());
  for (Index k = 0; k < angles.samples(); ++k) out.q.col(k) = render_pendulum(angles.q(0, k));
  return out;
}

}  // namespace dlda
