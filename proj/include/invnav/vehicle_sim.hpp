#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "invnav/se2.hpp"

namespace invnav {

/// Time profile of an odometry channel (angular or linear velocity).
struct Profile {
  enum class Kind { Constant, Sinusoid, Piecewise };

  Kind kind = Kind::Constant;
  double value = 0.0;  // Constant

  // Sinusoid: offset + amplitude * sin(2 pi frequency t + phase)
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;

  // Piecewise constant: (start time, value), sorted by start time. Before the
  // first break the profile is 0.
  std::vector<std::pair<double, double>> breaks;

  static Profile constant(double v);
  static Profile sinusoid(double offset, double amplitude, double frequency,
                          double phase = 0.0);
  static Profile piecewise(std::vector<std::pair<double, double>> breaks);

  double at(double t) const;
};

enum class Integrator {
  Exact,  // compose with exp((omega dt, u dt, 0))
  Euler,
};

struct ScenarioConfig {
  double dt = 0.01;
  double duration = 10.0;
  double meas_period = 0.05;
  Profile omega = Profile::constant(0.0);
  Profile u = Profile::constant(1.0);

  /// Measurement covariance N. Also what the filters are told, whether or not
  /// noise is actually injected.
  Mat2 gps_cov = Mat2::Identity();
  bool gps_noise = true;

  /// Velocity noise variances ((rad/s)^2 and (m/s)^2). The per-step increment
  /// noise has standard deviation dt * sqrt(variance).
  double odom_cov_omega = 0.0;
  double odom_cov_x = 0.0;
  bool odom_noise = false;

  double theta0 = 0.0;
  Vec2 x0 = Vec2::Zero();
  std::uint64_t seed = 0;
  Integrator integrator = Integrator::Exact;

  /// Number of simulation steps, round(duration / dt).
  std::size_t steps() const;
  /// Simulation steps between two measurements.
  std::size_t steps_per_measurement() const;

  /// Throws BadConfig.
  void validate() const;
};

struct CarState {
  double time = 0.0;
  double heading = 0.0;  // unwrapped
  Vec2 position = Vec2::Zero();

  Se2 pose() const { return Se2(heading, position); }
};

/// Odometry for the step [t_k, t_k + dt). `omega` and `u` are what a filter
/// receives; the truth additionally experienced the increment noise
/// (w_omega, w_x). Both noise terms are exactly zero when odometry noise is
/// disabled.
struct OdometryInput {
  double omega = 0.0;
  double u = 0.0;
  double w_omega = 0.0;
  Vec2 w_x = Vec2::Zero();

  /// Nominal increment exp((omega dt, u dt, 0)).
  Se2 increment(double dt) const;
};

struct GpsMeasurement {
  double time = 0.0;
  std::size_t step = 0;  // index into Trajectory::states
  Vec2 y = Vec2::Zero();
  Mat2 cov = Mat2::Identity();
};

struct Trajectory {
  std::vector<CarState> states;        // steps + 1 entries
  std::vector<OdometryInput> inputs;   // steps entries
  std::vector<GpsMeasurement> measurements;
  std::vector<Vec2> reference;         // b_t, aligned with states
  double dt = 0.0;
  double meas_period = 0.0;
  Integrator integrator = Integrator::Exact;

  std::size_t steps() const { return inputs.size(); }

  /// measurement index for each state, or -1.
  std::vector<long> measurement_index() const;
};

/// Simulates truth, odometry, measurements and the reference curve.
/// Deterministic in (config, seed).
Trajectory simulate(const ScenarioConfig& config, std::uint64_t seed);

/// Closed-form one-step update of b_t for constant (omega, u) over dt.
Vec2 reference_step(const Vec2& b, double omega, double u, double dt);

/// Left-translates the whole scenario by `g`: truth, measurements and
/// measurement covariances. Inputs and b_t are body-frame quantities and are
/// left untouched.
Trajectory left_translate(const Trajectory& traj, const Se2& g);

struct TraveledDistance {
  double polyline = 0.0;    // arc length of the sampled positions
  double odometric = 0.0;   // trapezoidal integral of u
};

TraveledDistance traveled_distance(const Trajectory& traj);
/// Arc length of an arbitrary path plus the odometric integral of `u`
/// (sampled with spacing dt). Needs at least two samples.
TraveledDistance traveled_distance(const std::vector<Vec2>& path,
                                   const std::vector<double>& u, double dt);

/// CSV: t,theta,x1,x2,b1,b2,omega,u,meas_flag,y1,y2
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace invnav
