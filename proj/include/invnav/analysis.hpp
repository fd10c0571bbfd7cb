#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "invnav/filters.hpp"
#include "invnav/vehicle_sim.hpp"

namespace invnav {

/// Heading variance a(t) of the invariant filter on a straight line at unit
/// speed with measurements every delta_t. Between updates the covariance is
///   [[a, 0, t a], [0, 0, 0], [t a, 0, t^2 a]]
/// and a only changes at update times.
struct RiccatiClosedForm {
  double p0 = 0.0;
  double r = 0.0;
  double delta_t = 0.0;
  /// a(t_n^+) for n = 0..n_max from the update recursion
  /// a+ = a - t^2 a^2 / (r + t^2 a). Entry 0 is p0.
  std::vector<double> a_recursive;
  /// The same quantity from 1/a(t_n^+) = 1/p0 + (dt^2/r) n(n+1)(2n+1)/6.
  std::vector<double> a_closed;

  std::size_t n_max() const { return a_closed.empty() ? 0 : a_closed.size() - 1; }
  /// a(t_n), the value just before update n (n >= 1).
  double a_prior(std::size_t n) const { return a_closed.at(n - 1); }
  /// Largest |a_recursive / a_closed - 1|.
  double max_relative_gap() const;
};

/// Throws BadConfig unless p0, r, delta_t are positive.
RiccatiClosedForm riccati_a_sequence(double p0, double r, double delta_t,
                                     std::size_t n_max);

/// alpha_n = t_n^2 a(t_n) / (t_n^2 a(t_n) + r) for n = 0..n_max (alpha_0 = 0).
std::vector<double> alpha_sequence(const RiccatiClosedForm& closed_form);

struct HeadingRecursionTrace {
  /// theta_tilde[n] is the heading error after update n; entry 0 is the
  /// initial error.
  std::vector<double> theta_tilde;
  std::vector<double> alpha;
};

/// theta_{n} = theta_{n-1} - alpha_n sin(theta_{n-1}) for n = 1..alphas.size()-1.
HeadingRecursionTrace heading_recursion(double theta0_tilde,
                                        std::vector<double> alphas);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t samples = 0;
};

/// Least squares fit of log(value) against log(n). Throws NonPositiveSample
/// if an n or a value is not strictly positive.
RateFit fit_rate(std::span<const double> n, std::span<const double> values);

/// Fit on values[n] for n in [n_lo, n_hi].
RateFit fit_rate(std::span<const double> values_by_n, std::size_t n_lo,
                 std::size_t n_hi);

/// Default fit window: the last two decades of [1, n_max], never below 100.
std::pair<std::size_t, std::size_t> default_fit_window(std::size_t n_max);

struct CrossCheckRow {
  std::size_t n = 0;
  double theta_filter = 0.0;   // heading error after update n
  double theta_scalar = 0.0;
  double gain_filter = 0.0;    // K(0, 1)
  double gain_formula = 0.0;
  double gain_filter_first = 0.0;  // K(0, 0), zero in theory
  Vec2 z_filter = Vec2::Zero();
  Vec2 z_formula = Vec2::Zero();
  double pos_error = 0.0;          // ||x_hat - x|| after update n
  double pos_error_predicted = 0.0;  // t u |theta_tilde|
};

struct CrossCheckReport {
  std::vector<CrossCheckRow> rows;
  double max_heading_gap = 0.0;
  double max_gain_gap = 0.0;
  double max_innovation_gap = 0.0;
};

/// Compares a full invariant-filter trace with the scalar heading recursion.
/// The trajectory must be a noise-free straight line at constant speed from
/// the origin with isotropic N = r I and measurements every delta_t, and the
/// trace must hold every update (record_stride 1). Throws ScenarioMismatch
/// otherwise.
CrossCheckReport cross_validate_iekf(const Trajectory& traj,
                                     const EstimateTrace& trace,
                                     const RiccatiClosedForm& closed_form);

/// n,a_n,alpha_n,theta_tilde,theta_tilde_scaled_n3
void write_recursion_csv(std::ostream& os, const RiccatiClosedForm& closed_form,
                         const HeadingRecursionTrace& recursion);

}  // namespace invnav
