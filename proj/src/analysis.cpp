#include "invnav/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "invnav/csv.hpp"
#include "invnav/errors.hpp"

namespace invnav {

double RiccatiClosedForm::max_relative_gap() const {
  double gap = 0.0;
  for (std::size_t n = 0; n < a_closed.size(); ++n) {
    gap = std::max(gap, std::abs(a_recursive[n] / a_closed[n] - 1.0));
  }
  return gap;
}

RiccatiClosedForm riccati_a_sequence(double p0, double r, double delta_t,
                                     std::size_t n_max) {
  if (!(p0 > 0.0) || !(r > 0.0) || !(delta_t > 0.0)) {
    throw BadConfig("riccati_a_sequence: p0, r and delta_t must be positive");
  }
  RiccatiClosedForm out;
  out.p0 = p0;
  out.r = r;
  out.delta_t = delta_t;
  out.a_recursive.resize(n_max + 1);
  out.a_closed.resize(n_max + 1);

  double a = p0;
  out.a_recursive[0] = a;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double t = static_cast<double>(n) * delta_t;
    const double t2a = t * t * a;
    // a - t^2 a^2 / (r + t^2 a), written without the cancellation
    a = a * r / (r + t2a);
    out.a_recursive[n] = a;
  }

  // n(n+1)(2n+1)/6 is an integer below 2^53 for every n of practical size,
  // so the pyramidal number itself is exact; the rest runs in long double.
  const long double inv_p0 = 1.0L / static_cast<long double>(p0);
  const long double scale = static_cast<long double>(delta_t) * delta_t / r;
  for (std::size_t n = 0; n <= n_max; ++n) {
    const auto nn = static_cast<unsigned long long>(n);
    const unsigned long long pyramid = nn * (nn + 1) * (2 * nn + 1) / 6;
    const long double inv_a = inv_p0 + scale * static_cast<long double>(pyramid);
    out.a_closed[n] = static_cast<double>(1.0L / inv_a);
  }
  return out;
}

std::vector<double> alpha_sequence(const RiccatiClosedForm& closed_form) {
  std::vector<double> alpha(closed_form.n_max() + 1, 0.0);
  for (std::size_t n = 1; n < alpha.size(); ++n) {
    const double t = static_cast<double>(n) * closed_form.delta_t;
    const double t2a = t * t * closed_form.a_prior(n);
    alpha[n] = t2a / (t2a + closed_form.r);
  }
  return alpha;
}

HeadingRecursionTrace heading_recursion(double theta0_tilde,
                                        std::vector<double> alphas) {
  HeadingRecursionTrace out;
  out.theta_tilde.resize(std::max<std::size_t>(alphas.size(), 1));
  out.theta_tilde[0] = theta0_tilde;
  for (std::size_t n = 1; n < alphas.size(); ++n) {
    const double prev = out.theta_tilde[n - 1];
    out.theta_tilde[n] = prev - alphas[n] * std::sin(prev);
  }
  out.alpha = std::move(alphas);
  return out;
}

RateFit fit_rate(std::span<const double> n, std::span<const double> values) {
  if (n.size() != values.size() || n.size() < 2) {
    throw BadConfig("fit_rate: need at least two (n, value) pairs");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] > 0.0) || !(values[i] > 0.0)) {
      throw NonPositiveSample("fit_rate: sample " + std::to_string(i) +
                              " is not strictly positive");
    }
    const double x = std::log(n[i]);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(n.size());
  const double denom = m * sxx - sx * sx;
  RateFit fit;
  fit.samples = n.size();
  fit.slope = (m * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / m;
  return fit;
}

RateFit fit_rate(std::span<const double> values_by_n, std::size_t n_lo,
                 std::size_t n_hi) {
  if (n_hi >= values_by_n.size() || n_lo > n_hi || n_lo == 0) {
    throw BadConfig("fit_rate: window out of range");
  }
  std::vector<double> n;
  n.reserve(n_hi - n_lo + 1);
  for (std::size_t k = n_lo; k <= n_hi; ++k) n.push_back(static_cast<double>(k));
  return fit_rate(n, values_by_n.subspan(n_lo, n_hi - n_lo + 1));
}

std::pair<std::size_t, std::size_t> default_fit_window(std::size_t n_max) {
  const std::size_t lo = std::max<std::size_t>(100, n_max / 100);
  return {std::min(lo, n_max), n_max};
}

CrossCheckReport cross_validate_iekf(const Trajectory& traj,
                                     const EstimateTrace& trace,
                                     const RiccatiClosedForm& closed_form) {
  if (trace.kind != FilterKind::Iekf) {
    throw ScenarioMismatch("cross check needs an invariant filter trace");
  }
  if (traj.inputs.empty() || traj.measurements.empty()) {
    throw ScenarioMismatch("cross check needs inputs and measurements");
  }
  const double u = traj.inputs.front().u;
  for (const auto& in : traj.inputs) {
    if (in.omega != 0.0 || in.u != u || in.w_omega != 0.0 || !in.w_x.isZero()) {
      throw ScenarioMismatch("cross check needs omega = 0, constant u and no odometry noise");
    }
  }
  if (!traj.states.front().position.isZero()) {
    throw ScenarioMismatch("cross check needs the car to start at the origin");
  }
  const double r = closed_form.r;
  for (std::size_t k = 0; k < traj.measurements.size(); ++k) {
    const auto& m = traj.measurements[k];
    const double t_expected = static_cast<double>(k + 1) * closed_form.delta_t;
    if (std::abs(m.time - t_expected) > 1e-9 * std::max(1.0, t_expected)) {
      throw ScenarioMismatch("measurement times are not multiples of delta_t");
    }
    if (!m.cov.isApprox(r * Mat2::Identity(), 1e-12)) {
      throw ScenarioMismatch("measurement covariance is not r I");
    }
    if (m.y != traj.states[m.step].position) {
      throw ScenarioMismatch("measurements are not noise free");
    }
  }
  if (trace.records.empty() ||
      std::abs(trace.records.front().cov(0, 0) - closed_form.p0) >
          1e-12 * closed_form.p0) {
    throw ScenarioMismatch("initial heading variance differs from p0");
  }
  const std::size_t n_updates =
      std::min(traj.measurements.size(), closed_form.n_max());

  const double theta0 = trace.records.front().err_theta_prior;
  const HeadingRecursionTrace scalar =
      heading_recursion(theta0, alpha_sequence(closed_form));

  CrossCheckReport report;
  report.rows.reserve(n_updates);
  std::size_t n = 0;
  for (const auto& rec : trace.records) {
    if (!rec.updated) continue;
    ++n;
    if (n > n_updates) break;
    const double t = static_cast<double>(n) * closed_form.delta_t;
    const double a = closed_form.a_prior(n);
    CrossCheckRow row;
    row.n = n;
    row.theta_filter = rec.err_theta;
    row.theta_scalar = scalar.theta_tilde[n];
    row.gain_filter = rec.gain(0, 1);
    row.gain_filter_first = rec.gain(0, 0);
    row.gain_formula = t * a / (t * t * a + r);
    row.z_filter = rec.innovation;
    const double prior = rec.err_theta_prior;
    row.z_formula = t * u * Vec2(std::cos(prior) - 1.0, -std::sin(prior));
    row.pos_error = rec.err_pos;
    row.pos_error_predicted = t * u * std::abs(rec.err_theta);

    report.max_heading_gap =
        std::max(report.max_heading_gap, std::abs(row.theta_filter - row.theta_scalar));
    report.max_gain_gap = std::max(
        {report.max_gain_gap, std::abs(row.gain_filter - row.gain_formula),
         std::abs(row.gain_filter_first)});
    report.max_innovation_gap =
        std::max(report.max_innovation_gap, (row.z_filter - row.z_formula).norm());
    report.rows.push_back(row);
  }
  if (n < n_updates) {
    throw ScenarioMismatch("trace does not hold every update (record_stride must be 1)");
  }
  return report;
}

void write_recursion_csv(std::ostream& os, const RiccatiClosedForm& closed_form,
                         const HeadingRecursionTrace& recursion) {
  CsvWriter csv(os);
  csv.header({"n", "a_n", "alpha_n", "theta_tilde", "theta_tilde_scaled_n3"});
  const std::size_t count = std::min(closed_form.a_closed.size(), recursion.theta_tilde.size());
  for (std::size_t n = 0; n < count; ++n) {
    const double nd = static_cast<double>(n);
    const double alpha = n < recursion.alpha.size() ? recursion.alpha[n] : 0.0;
    csv.row() << static_cast<unsigned long>(n) << closed_form.a_closed[n] << alpha
              << recursion.theta_tilde[n] << recursion.theta_tilde[n] * nd * nd * nd;
    csv.end_row();
  }
}

}  // namespace invnav
