#include "invnav/vehicle_sim.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "invnav/csv.hpp"
#include "invnav/errors.hpp"
#include "invnav/rng.hpp"

namespace invnav {

Profile Profile::constant(double v) {
  Profile p;
  p.kind = Kind::Constant;
  p.value = v;
  return p;
}

Profile Profile::sinusoid(double offset, double amplitude, double frequency,
                          double phase) {
  Profile p;
  p.kind = Kind::Sinusoid;
  p.offset = offset;
  p.amplitude = amplitude;
  p.frequency = frequency;
  p.phase = phase;
  return p;
}

Profile Profile::piecewise(std::vector<std::pair<double, double>> breaks) {
  Profile p;
  p.kind = Kind::Piecewise;
  std::sort(breaks.begin(), breaks.end());
  p.breaks = std::move(breaks);
  return p;
}

double Profile::at(double t) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::Sinusoid:
      return offset +
             amplitude * std::sin(2.0 * std::numbers::pi * frequency * t + phase);
    case Kind::Piecewise: {
      double v = 0.0;
      for (const auto& [start, val] : breaks) {
        if (t + 1e-12 < start) break;
        v = val;
      }
      return v;
    }
  }
  return 0.0;
}

std::size_t ScenarioConfig::steps() const {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

std::size_t ScenarioConfig::steps_per_measurement() const {
  return static_cast<std::size_t>(std::llround(meas_period / dt));
}

void ScenarioConfig::validate() const {
  if (!(dt > 0.0)) throw BadConfig("dt must be positive");
  if (!(duration >= 0.0)) throw BadConfig("duration must be non-negative");
  if (!(meas_period > 0.0)) throw BadConfig("meas_period must be positive");
  const double ratio = meas_period / dt;
  if (ratio < 0.5 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw BadConfig("meas_period must be an integer multiple of dt");
  }
  if (!gps_cov.isApprox(gps_cov.transpose(), 1e-12)) {
    throw BadConfig("gps_cov must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat2> eig(gps_cov);
  if (eig.eigenvalues().minCoeff() < 0.0) {
    throw BadConfig("gps_cov has a negative eigenvalue");
  }
  if (odom_cov_omega < 0.0 || odom_cov_x < 0.0) {
    throw BadConfig("odometry variances must be non-negative");
  }
}

Se2 OdometryInput::increment(double dt) const {
  return exp(Tangent3(omega * dt, u * dt, 0.0));
}

std::vector<long> Trajectory::measurement_index() const {
  std::vector<long> idx(states.size(), -1);
  for (std::size_t k = 0; k < measurements.size(); ++k) {
    idx[measurements[k].step] = static_cast<long>(k);
  }
  return idx;
}

Vec2 reference_step(const Vec2& b, double omega, double u, double dt) {
  const double phi = omega * dt;
  return rotation_matrix(-phi) * b +
         exp_translation_block(-phi) * Vec2(u * dt, 0.0);
}

Trajectory simulate(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  const double dt = config.dt;
  const std::size_t n = config.steps();
  const std::size_t per_meas = config.steps_per_measurement();
  const double sd_omega = config.odom_noise ? dt * std::sqrt(config.odom_cov_omega) : 0.0;
  const double sd_x = config.odom_noise ? dt * std::sqrt(config.odom_cov_x) : 0.0;
  // Square-root factor of N; rank-deficient N is allowed.
  Eigen::SelfAdjointEigenSolver<Mat2> eig(config.gps_cov);
  const Mat2 gps_factor = eig.eigenvectors() *
                          eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  CounterRng rng(seed);
  Trajectory traj;
  traj.dt = dt;
  traj.meas_period = config.meas_period;
  traj.integrator = config.integrator;
  traj.states.reserve(n + 1);
  traj.inputs.reserve(n);
  traj.reference.reserve(n + 1);
  traj.measurements.reserve(per_meas > 0 ? n / per_meas : 0);

  Se2 pose(config.theta0, config.x0);
  Vec2 b = rotation_matrix(-config.theta0) * config.x0;
  traj.states.push_back({0.0, pose.heading(), pose.position()});
  traj.reference.push_back(b);

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    OdometryInput in;
    in.omega = config.omega.at(t);
    in.u = config.u.at(t);
    const double n_omega = rng.normal();
    const double n_x1 = rng.normal();
    const double n_x2 = rng.normal();
    in.w_omega = sd_omega * n_omega;
    in.w_x = sd_x * Vec2(n_x1, n_x2);

    if (config.integrator == Integrator::Exact) {
      const double phi = in.omega * dt;
      const Tangent3 noise(in.w_omega,
                           (rotation_matrix(-phi) * in.w_x)(0),
                           (rotation_matrix(-phi) * in.w_x)(1));
      pose = pose * in.increment(dt);
      if (config.odom_noise) pose = pose * exp(noise);
      b = reference_step(b, in.omega, in.u, dt);
    } else {
      const Vec2 step = pose.rotation() * (Vec2(in.u * dt, 0.0) + in.w_x);
      pose = Se2(pose.heading() + in.omega * dt + in.w_omega,
                 pose.position() + step);
      b = b + dt * (-in.omega * rotation_generator() * b + Vec2(in.u, 0.0));
    }
    traj.inputs.push_back(in);
    const double t_next = static_cast<double>(k + 1) * dt;
    traj.states.push_back({t_next, pose.heading(), pose.position()});
    traj.reference.push_back(b);

    if ((k + 1) % per_meas == 0) {
      const Vec2 v(rng.normal(), rng.normal());
      GpsMeasurement m;
      m.time = t_next;
      m.step = k + 1;
      m.cov = config.gps_cov;
      m.y = pose.position();
      if (config.gps_noise) m.y += gps_factor * v;
      traj.measurements.push_back(m);
    }
  }
  return traj;
}

Trajectory left_translate(const Trajectory& traj, const Se2& g) {
  Trajectory out = traj;
  const Mat2 r = g.rotation_matrix();
  for (auto& s : out.states) {
    const Se2 moved = g * s.pose();
    s.heading = moved.heading();
    s.position = moved.position();
  }
  for (auto& m : out.measurements) {
    m.y = g.act(m.y);
    m.cov = r * m.cov * r.transpose();
  }
  return out;
}

TraveledDistance traveled_distance(const std::vector<Vec2>& path,
                                   const std::vector<double>& u, double dt) {
  if (path.size() < 2) throw BadConfig("traveled_distance needs >= 2 samples");
  TraveledDistance d;
  for (std::size_t k = 1; k < path.size(); ++k) {
    d.polyline += (path[k] - path[k - 1]).norm();
  }
  for (std::size_t k = 1; k < u.size(); ++k) {
    d.odometric += 0.5 * dt * (u[k - 1] + u[k]);
  }
  return d;
}

TraveledDistance traveled_distance(const Trajectory& traj) {
  std::vector<Vec2> path;
  std::vector<double> u;
  path.reserve(traj.states.size());
  u.reserve(traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    path.push_back(traj.states[k].position);
    if (!traj.inputs.empty()) {
      u.push_back(traj.inputs[std::min(k, traj.inputs.size() - 1)].u);
    }
  }
  return traveled_distance(path, u, traj.dt);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  CsvWriter csv(os);
  csv.header({"t", "theta", "x1", "x2", "b1", "b2", "omega", "u", "meas_flag",
              "y1", "y2"});
  const auto meas = traj.measurement_index();
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto& s = traj.states[k];
    const OdometryInput in =
        k < traj.inputs.size() ? traj.inputs[k]
                               : (traj.inputs.empty() ? OdometryInput{}
                                                      : traj.inputs.back());
    csv.row() << s.time << s.heading << s.position(0) << s.position(1)
              << traj.reference[k](0) << traj.reference[k](1) << in.omega
              << in.u;
    if (meas[k] >= 0) {
      const auto& m = traj.measurements[static_cast<std::size_t>(meas[k])];
      csv << 1 << m.y(0) << m.y(1);
    } else {
      csv << 0 << CsvWriter::empty << CsvWriter::empty;
    }
    csv.end_row();
  }
}

}  // namespace invnav
