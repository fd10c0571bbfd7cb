#include "invnav/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "invnav/analysis.hpp"
#include "invnav/csv.hpp"
#include "invnav/errors.hpp"
#include "invnav/filters.hpp"
#include "invnav/linear_kf.hpp"
#include "invnav/rng.hpp"
#include "invnav/scenario_io.hpp"
#include "invnav/smoothing.hpp"
#include "invnav/thresholds.hpp"
#include "invnav/vehicle_sim.hpp"

namespace invnav {

namespace th = thresholds;

Check make_check(std::string name, double measured, std::string relation,
                 double threshold) {
  bool pass = false;
  if (relation == "<") pass = measured < threshold;
  else if (relation == "<=") pass = measured <= threshold;
  else if (relation == ">") pass = measured > threshold;
  else if (relation == ">=") pass = measured >= threshold;
  else throw BadConfig("unknown relation '" + relation + "'");
  // NaN compares false everywhere, so it always fails.
  return Check{std::move(name), measured, threshold, std::move(relation), pass};
}

bool ExperimentResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

class Outputs {
 public:
  Outputs(const std::optional<std::filesystem::path>& dir, ExperimentResult& result)
      : dir_(dir), result_(result) {
    if (dir_) std::filesystem::create_directories(*dir_);
  }

  template <typename Body>
  void file(const std::string& name, Body&& body) {
    if (!dir_) return;
    const auto path = *dir_ / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::ios_base::failure("cannot open " + path.string());
    body(os);
    os.flush();
    if (!os) throw std::ios_base::failure("cannot write " + path.string());
    result_.files.push_back(path);
  }

 private:
  std::optional<std::filesystem::path> dir_;
  ExperimentResult& result_;
};

struct Context {
  const ExperimentSpec& spec;
  ExperimentResult& result;
  Outputs out;

  void fact(const std::string& key, const std::string& value) {
    result.facts.emplace_back(key, value);
  }
  void fact(const std::string& key, double value) { fact(key, fmt(value)); }
  void check(std::string name, double measured, std::string relation, double threshold) {
    result.checks.push_back(
        make_check(std::move(name), measured, std::move(relation), threshold));
  }

  ScenarioConfig scenario(ScenarioConfig base) const {
    base.seed = spec.seed;
    if (spec.config) base = load_scenario(spec.config->string(), base);
    return base;
  }
};

// Largest departure from left-equivariance between a run and the same run in
// a frame moved by g: means compared after left translation, covariances,
// gains and innovations compared as they are.
double invariance_gap(const EstimateTrace& a, const EstimateTrace& b, const Se2& g) {
  if (a.records.size() != b.records.size()) {
    throw ScenarioMismatch("traces have different lengths");
  }
  double gap = 0.0;
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    const auto& ra = a.records[k];
    const auto& rb = b.records[k];
    const Se2 moved = g * ra.mean;
    gap = std::max({gap, std::abs(moved.heading() - rb.mean.heading()),
                    (moved.position() - rb.mean.position()).norm(),
                    (ra.cov - rb.cov).cwiseAbs().maxCoeff(),
                    (ra.gain - rb.gain).cwiseAbs().maxCoeff(),
                    (ra.innovation - rb.innovation).norm()});
  }
  return gap;
}

// ---------------------------------------------------------------- fig1

ScenarioConfig fig1_scenario() {
  ScenarioConfig c;
  c.dt = 0.01;
  c.duration = 5.0;
  c.meas_period = 0.25;
  c.omega = Profile::constant(0.0);
  c.u = Profile::constant(1.0);
  c.gps_cov = Mat2::Identity();
  c.gps_noise = true;
  return c;
}

ScenarioConfig witness_scenario() {
  ScenarioConfig c;
  c.dt = 0.01;
  c.duration = 10.0;
  c.meas_period = 0.1;
  c.omega = Profile::sinusoid(0.1, 0.4, 0.2);
  c.u = Profile::constant(1.0);
  c.gps_cov << 0.5, 0.1, 0.1, 2.0;
  c.gps_noise = true;
  return c;
}

const Se2 kWitnessFrame(1.0, Vec2(3.0, -2.0));
constexpr double kFig1HeadingError = 40.0 * kDeg;

void run_fig1(Context& ctx) {
  ScenarioConfig cfg = ctx.scenario(fig1_scenario());
  if (ctx.spec.steps) cfg.duration = static_cast<double>(*ctx.spec.steps) * cfg.dt;
  cfg.validate();
  const Trajectory traj = simulate(cfg, cfg.seed);
  const double theta_hat = cfg.theta0 + kFig1HeadingError;
  const EstimateTrace ekf = run_filter(FilterKind::Ekf, traj, theta_hat);
  const EstimateTrace iekf = run_filter(FilterKind::Iekf, traj, theta_hat);
  ctx.out.file("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  ctx.out.file("ekf_trace.csv", [&](std::ostream& os) { write_trace_csv(os, ekf); });
  ctx.out.file("iekf_trace.csv", [&](std::ostream& os) { write_trace_csv(os, iekf); });
  ctx.fact("scenario.heading_error_deg", 40.0);
  ctx.fact("scenario.updates", static_cast<double>(traj.measurements.size()));
  ctx.check("iekf_max_manifold_residual", iekf.max_manifold_resid, "<",
            th::kManifoldResidual);
  ctx.check("ekf_max_manifold_residual", ekf.max_manifold_resid, ">",
            th::kLeftInvarianceWitness);

  // Left-invariance, on a scenario with turns and anisotropic N.
  ScenarioConfig wcfg = witness_scenario();
  wcfg.seed = cfg.seed;
  const Trajectory w = simulate(wcfg, wcfg.seed);
  const Trajectory wg = left_translate(w, kWitnessFrame);
  RunConfig moved;
  moved.initial_position = kWitnessFrame.position();
  const double w_theta_hat = wcfg.theta0 + kFig1HeadingError;
  const double g_theta_hat = w_theta_hat + kWitnessFrame.heading();
  const double iekf_gap =
      invariance_gap(run_filter(FilterKind::Iekf, w, w_theta_hat),
                     run_filter(FilterKind::Iekf, wg, g_theta_hat, moved), kWitnessFrame);
  const double ekf_gap =
      invariance_gap(run_filter(FilterKind::Ekf, w, w_theta_hat),
                     run_filter(FilterKind::Ekf, wg, g_theta_hat, moved), kWitnessFrame);
  ctx.check("iekf_left_invariance_gap", iekf_gap, "<", th::kLeftInvariance);
  ctx.check("ekf_left_invariance_gap", ekf_gap, ">", th::kLeftInvarianceWitness);
}

// ---------------------------------------------------------------- fig2

ScenarioConfig fig2_scenario() {
  ScenarioConfig c;
  c.dt = 0.01;
  c.meas_period = 0.05;
  c.duration = static_cast<double>(th::kOdometerUpdates) * c.meas_period;
  c.omega = Profile::constant(0.0);
  c.u = Profile::constant(1.0);
  c.gps_cov = Mat2::Identity();
  c.gps_noise = true;
  return c;
}

void run_fig2(Context& ctx) {
  ScenarioConfig cfg = ctx.scenario(fig2_scenario());
  if (ctx.spec.steps) cfg.duration = static_cast<double>(*ctx.spec.steps) * cfg.meas_period;
  cfg.validate();
  const Trajectory traj = simulate(cfg, cfg.seed);
  for (const auto& in : traj.inputs) {
    if (in.omega != 0.0) throw ScenarioMismatch("the odometer experiment needs omega = 0");
  }
  const double theta_hat = cfg.theta0 + kFig1HeadingError;
  const EstimateTrace ekf = run_filter(FilterKind::Ekf, traj, theta_hat);
  const EstimateTrace iekf = run_filter(FilterKind::Iekf, traj, theta_hat);

  // Odometric distance by the trapezoid rule on u.
  std::vector<double> alpha(traj.states.size(), 0.0);
  for (std::size_t k = 1; k < alpha.size(); ++k) {
    const double u0 = traj.inputs[k - 1].u;
    const double u1 = k < traj.inputs.size() ? traj.inputs[k].u : u0;
    alpha[k] = alpha[k - 1] + 0.5 * (u0 + u1) * traj.dt;
  }
  double ekf_err = 0.0, iekf_err = 0.0;
  ctx.out.file("odometer.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"t", "alpha", "iekf_err", "ekf_err"});
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      csv.row() << traj.states[k].time << alpha[k]
                << std::abs(iekf.records[k].mean.position().norm() - alpha[k])
                << std::abs(ekf.records[k].mean.position().norm() - alpha[k]);
      csv.end_row();
    }
  });
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    iekf_err = std::max(iekf_err, std::abs(iekf.records[k].mean.position().norm() - alpha[k]));
    ekf_err = std::max(ekf_err, std::abs(ekf.records[k].mean.position().norm() - alpha[k]));
  }
  ctx.out.file("ekf_trace.csv", [&](std::ostream& os) { write_trace_csv(os, ekf); });
  ctx.out.file("iekf_trace.csv", [&](std::ostream& os) { write_trace_csv(os, iekf); });
  ctx.fact("scenario.updates", static_cast<double>(traj.measurements.size()));
  ctx.fact("scenario.heading_error_deg", 40.0);
  ctx.check("iekf_odometer_error", iekf_err, "<", th::kOdometerInvariant);
  ctx.check("ekf_odometer_error", ekf_err, ">", th::kOdometerEkf);
}

// ---------------------------------------------------------------- fig3

ScenarioConfig straight_line(double delta_t, std::size_t updates) {
  ScenarioConfig c;
  c.dt = delta_t;
  c.meas_period = delta_t;
  c.duration = static_cast<double>(updates) * delta_t;
  c.omega = Profile::constant(0.0);
  c.u = Profile::constant(1.0);
  c.gps_cov = Mat2::Identity();
  c.gps_noise = false;
  return c;
}

void run_fig3(Context& ctx) {
  ScenarioConfig cfg = ctx.scenario(straight_line(1.0, th::kLongRunSteps));
  if (ctx.spec.steps) cfg.duration = static_cast<double>(*ctx.spec.steps) * cfg.dt;
  cfg.validate();
  const Trajectory traj = simulate(cfg, cfg.seed);

  struct Run {
    FilterKind kind;
    double error_deg;
    std::string label;
  };
  const std::vector<Run> runs = {{FilterKind::Ekf, 5.0, "ekf_5deg"},
                                 {FilterKind::Ekf, 40.0, "ekf_40deg"},
                                 {FilterKind::Iekf, 5.0, "iekf_5deg"},
                                 {FilterKind::Iekf, 40.0, "iekf_40deg"}};
  RunConfig rc;
  rc.record_stride = std::max<std::size_t>(1, traj.steps() / 10000);
  std::vector<EstimateTrace> traces(runs.size());
  parallel_for(runs.size(), ctx.spec.threads, [&](std::size_t i) {
    traces[i] = run_filter(runs[i].kind, traj, cfg.theta0 + runs[i].error_deg * kDeg, rc);
  });
  std::vector<double> final_err(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    final_err[i] = traces[i].records.back().err_pos;
    ctx.fact("final_position_error." + runs[i].label, final_err[i]);
    ctx.out.file(runs[i].label + "_trace.csv",
                 [&](std::ostream& os) { write_trace_csv(os, traces[i]); });
  }
  ctx.fact("scenario.steps", static_cast<double>(traj.steps()));
  ctx.fact("scenario.record_stride", static_cast<double>(rc.record_stride));
  // Ratios against the invariant filter; its error may reach exact zero.
  const auto ratio = [](double num, double den) {
    return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
  };
  ctx.check("ekf5_over_iekf5_final_error", ratio(final_err[0], final_err[2]), ">",
            th::kLongRunRatio);
  ctx.check("ekf5_over_iekf40_final_error", ratio(final_err[0], final_err[3]), ">",
            th::kLongRunRatio);
}

// ---------------------------------------------------------------- thm3

ScenarioConfig thm3_scenario() {
  ScenarioConfig c;
  c.dt = 0.01;
  c.meas_period = 0.05;
  c.duration = static_cast<double>(th::kManifoldSteps) * c.dt;
  c.u = Profile::constant(1.0);
  c.gps_cov = Mat2::Identity();
  return c;
}

void run_thm3(Context& ctx) {
  ScenarioConfig base = ctx.scenario(thm3_scenario());
  if (ctx.spec.steps) base.duration = static_cast<double>(*ctx.spec.steps) * base.dt;
  const std::vector<std::pair<std::string, Profile>> profiles = {
      {"constant", Profile::constant(0.5)},
      {"sinusoid", Profile::sinusoid(0.1, 0.5, 0.2)}};
  const std::size_t n_head = th::kManifoldHeadings;

  CounterRng rng(ctx.spec.seed ^ 0x7468336dULL);
  std::vector<double> headings(n_head);
  for (auto& h : headings) h = kPi * (2.0 * rng.uniform() - 1.0);

  struct Row {
    std::size_t heading;
    std::size_t profile;
    bool noisy;
    double residual = 0.0;
  };
  std::vector<Row> rows;
  for (std::size_t h = 0; h < n_head; ++h) {
    for (std::size_t p = 0; p < profiles.size(); ++p) {
      for (bool noisy : {false, true}) rows.push_back({h, p, noisy});
    }
  }
  parallel_for(rows.size(), ctx.spec.threads, [&](std::size_t i) {
    Row& row = rows[i];
    ScenarioConfig cfg = base;
    cfg.omega = profiles[row.profile].second;
    cfg.gps_noise = row.noisy;
    cfg.validate();
    const Trajectory traj = simulate(cfg, base.seed + row.heading);
    RunConfig rc;
    rc.record_stride = traj.steps();
    row.residual =
        run_filter(FilterKind::Iekf, traj, headings[row.heading], rc).max_manifold_resid;
  });

  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.residual);
  ctx.out.file("residuals.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"theta0_hat", "omega_profile", "gps_noise", "max_residual"});
    for (const auto& r : rows) {
      csv.row() << headings[r.heading] << std::string_view(profiles[r.profile].first)
                << (r.noisy ? 1 : 0) << r.residual;
      csv.end_row();
    }
  });

  // Same first run with the omega coupling placed in the transposed slot.
  ScenarioConfig cfg = base;
  cfg.omega = profiles[1].second;
  cfg.validate();
  const Trajectory traj = simulate(cfg, base.seed);
  RunConfig rc;
  rc.record_stride = traj.steps();
  rc.options.omega_coupling = OmegaCoupling::Transposed;
  ctx.fact("transposed_coupling_max_residual",
           run_filter(FilterKind::Iekf, traj, headings[0], rc).max_manifold_resid);
  ctx.fact("scenario.runs", static_cast<double>(rows.size()));
  ctx.fact("scenario.steps", static_cast<double>(cfg.steps()));
  ctx.check("iekf_max_manifold_residual", worst, "<", th::kManifoldResidual);
}

// ---------------------------------------------------------------- thm4

constexpr double kRateP0 = kPi / 2.0;
constexpr double kRateR = 1.0;
constexpr double kRateDeltaT = 1.0;

void run_thm4(Context& ctx) {
  const std::size_t n_max = ctx.spec.steps.value_or(th::kRateFitHi);
  ScenarioConfig cfg = ctx.scenario(straight_line(kRateDeltaT, n_max));
  cfg.gps_cov = kRateR * Mat2::Identity();
  cfg.validate();
  const Trajectory traj = simulate(cfg, cfg.seed);
  RunConfig rc;
  rc.initial_cov = heading_only_covariance(kRateP0);

  const auto errors = [&](double theta_hat) {
    const EstimateTrace t = run_filter(FilterKind::Iekf, traj, theta_hat, rc);
    std::vector<double> heading(n_max + 1), position(n_max + 1);
    heading[0] = std::abs(t.records[0].err_theta_prior);
    position[0] = 0.0;
    for (const auto& r : t.records) {
      if (!r.updated) continue;
      const std::size_t n = static_cast<std::size_t>(std::llround(r.time / kRateDeltaT));
      if (n <= n_max) {
        heading[n] = std::abs(r.err_theta);
        position[n] = r.err_pos;
      }
    }
    return std::pair{heading, position};
  };

  const auto [heading, position] = errors(cfg.theta0 + kFig1HeadingError);
  auto [lo, hi] = default_fit_window(n_max);
  if (n_max >= th::kRateFitHi) std::tie(lo, hi) = std::pair{th::kRateFitLo, th::kRateFitHi};
  const RateFit fh = fit_rate(heading, lo, hi);
  const RateFit fp = fit_rate(position, lo, hi);

  const RiccatiClosedForm cf = riccati_a_sequence(kRateP0, kRateR, kRateDeltaT, n_max);
  const HeadingRecursionTrace scalar =
      heading_recursion(kFig1HeadingError, alpha_sequence(cf));
  ctx.out.file("rates.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"n", "heading_error", "position_error", "scalar_heading_error"});
    for (std::size_t n = 0; n <= n_max; ++n) {
      csv.row() << static_cast<unsigned long>(n) << heading[n] << position[n]
                << std::abs(scalar.theta_tilde[n]);
      csv.end_row();
    }
  });
  ctx.out.file("recursion.csv",
               [&](std::ostream& os) { write_recursion_csv(os, cf, scalar); });

  // Antipodal initial error, in the full filter and in the scalar recursion.
  const auto [anti, anti_pos] = errors(cfg.theta0 + kPi);
  double drift = 0.0;
  for (double e : anti) drift = std::max(drift, std::abs(e - kPi));
  const HeadingRecursionTrace anti_scalar = heading_recursion(kPi, alpha_sequence(cf));
  double scalar_drift = 0.0;
  for (double e : anti_scalar.theta_tilde) scalar_drift = std::max(scalar_drift, std::abs(e - kPi));

  ctx.fact("fit.n_lo", static_cast<double>(lo));
  ctx.fact("fit.n_hi", static_cast<double>(hi));
  ctx.fact("fit.heading_intercept", fh.intercept);
  ctx.fact("fit.position_intercept", fp.intercept);
  ctx.fact("scenario.heading_error_deg", 40.0);
  ctx.fact("scenario.p0", kRateP0);
  ctx.fact("scenario.r", kRateR);
  ctx.fact("scenario.delta_t", kRateDeltaT);
  ctx.check("heading_slope_min", fh.slope, ">=", th::kHeadingSlopeLo);
  ctx.check("heading_slope_max", fh.slope, "<=", th::kHeadingSlopeHi);
  ctx.check("position_slope_min", fp.slope, ">=", th::kPositionSlopeLo);
  ctx.check("position_slope_max", fp.slope, "<=", th::kPositionSlopeHi);
  ctx.check("antipode_drift_filter", drift, "<", th::kAntipodeDrift);
  ctx.check("antipode_drift_scalar", scalar_drift, "<", th::kAntipodeDrift);
}

// ---------------------------------------------------------------- prop1

void run_prop1(Context& ctx) {
  const std::size_t steps = ctx.spec.steps.value_or(th::kLinearSteps);
  const double dt = 0.01;
  // Planar double integrator (p1, p2, v1, v2), known initial position.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  a(0, 2) = a(1, 3) = 1.0;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 4);
  h(0, 0) = h(1, 1) = 1.0;
  const Eigen::MatrixXd n = 0.5 * Eigen::MatrixXd::Identity(2, 2);

  Eigen::VectorXd x(4);
  x << 0.0, 0.0, 1.0, -0.5;
  LinearKfState kf;
  kf.mean = Eigen::VectorXd::Zero(4);
  kf.cov = Eigen::Vector4d(0.0, 0.0, 4.0, 4.0).asDiagonal();
  kf.constraint = h;
  kf.alpha = Eigen::VectorXd::Zero(2);

  CounterRng rng(ctx.spec.seed);
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(4, 4) + a * dt;
  const double sd = std::sqrt(0.5);
  double violation = constraint_violation(kf);
  double dispersion = constraint_dispersion(kf);
  std::vector<std::array<double, 3>> rows{{0.0, violation, dispersion}};
  for (std::size_t k = 1; k <= steps; ++k) {
    x = phi * x;  // exact for a nilpotent A of index 2
    Eigen::VectorXd y = h * x;
    y(0) += sd * rng.normal();
    y(1) += sd * rng.normal();
    kf = linear_kf_step(kf, a, dt, h, y, n);
    const double v = constraint_violation(kf);
    const double d = constraint_dispersion(kf);
    violation = std::max(violation, v);
    dispersion = std::max(dispersion, d);
    rows.push_back({static_cast<double>(k) * dt, v, d});
  }
  ctx.out.file("linear_kf.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"t", "constraint_violation", "constraint_dispersion"});
    for (const auto& r : rows) {
      csv.row() << r[0] << r[1] << r[2];
      csv.end_row();
    }
  });
  ctx.fact("scenario.steps", static_cast<double>(steps));
  ctx.check("max_constraint_violation", violation, "<", th::kLinearConstraint);
  ctx.check("max_constraint_dispersion", dispersion, "<", th::kLinearConstraint);
}

// ---------------------------------------------------------------- appB

void run_appb(Context& ctx) {
  const std::size_t updates = ctx.spec.steps.value_or(th::kScalarRecursionUpdates);
  const RiccatiClosedForm cf = riccati_a_sequence(
      kRateP0, kRateR, kRateDeltaT, std::max(th::kClosedFormN, updates));
  ScenarioConfig cfg = ctx.scenario(straight_line(kRateDeltaT, updates));
  cfg.gps_cov = kRateR * Mat2::Identity();
  cfg.validate();
  const Trajectory traj = simulate(cfg, cfg.seed);
  RunConfig rc;
  rc.initial_cov = heading_only_covariance(kRateP0);
  const EstimateTrace trace =
      run_filter(FilterKind::Iekf, traj, cfg.theta0 + kFig1HeadingError, rc);
  const CrossCheckReport report = cross_validate_iekf(traj, trace, cf);

  ctx.out.file("crosscheck.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"n", "theta_filter", "theta_scalar", "gain_filter", "gain_formula",
                "z1_filter", "z2_filter", "z1_formula", "z2_formula", "pos_error",
                "pos_error_predicted"});
    for (const auto& r : report.rows) {
      csv.row() << static_cast<unsigned long>(r.n) << r.theta_filter << r.theta_scalar
                << r.gain_filter << r.gain_formula << r.z_filter(0) << r.z_filter(1)
                << r.z_formula(0) << r.z_formula(1) << r.pos_error << r.pos_error_predicted;
      csv.end_row();
    }
  });
  ctx.fact("closed_form.n_max", static_cast<double>(cf.n_max()));
  ctx.fact("crosscheck.updates", static_cast<double>(report.rows.size()));
  ctx.fact("crosscheck.max_gain_gap", report.max_gain_gap);
  ctx.fact("crosscheck.max_innovation_gap", report.max_innovation_gap);
  ctx.check("closed_form_relative_gap", cf.max_relative_gap(), "<", th::kClosedFormRelative);
  ctx.check("scalar_recursion_heading_gap", report.max_heading_gap, "<",
            th::kScalarRecursionGap);
}

// ---------------------------------------------------------------- smoothing

constexpr Parametrization kParams[] = {Parametrization::Invariant, Parametrization::Linear,
                                       Parametrization::Grisetti, Parametrization::Forster};

ScenarioConfig batch_scenario() {
  ScenarioConfig c;
  c.dt = 0.1;
  c.duration = 10.0;
  c.meas_period = 0.5;
  c.omega = Profile::constant(0.0);
  c.u = Profile::constant(7.0);
  c.gps_cov = 0.01 * Mat2::Identity();
  c.gps_noise = true;
  c.odom_cov_x = 0.1;
  c.odom_cov_omega = 0.01;
  c.odom_noise = true;
  return c;
}

constexpr double kBatchHeadingOffset = -3.0 * kPi / 4.0;

PriorFactor batch_prior(const ScenarioConfig& cfg) {
  PriorFactor p;
  p.mean = Se2(cfg.theta0 + kBatchHeadingOffset, cfg.x0);
  p.cov = Vec3(kBatchHeadingOffset * kBatchHeadingOffset, 0.0025, 0.0025).asDiagonal();
  return p;
}

// Largest mismatch between analytic and central-difference Jacobians over all
// factors, scaled by max(1, |entry|).
double jacobian_fd_error(const FactorGraphProblem& problem, const std::vector<Se2>& est,
                         const SmootherOptions& opt) {
  const LinearizedSystem sys = build_linearization(problem, est, opt);
  constexpr double h = 1e-6;
  double worst = 0.0;
  for (std::size_t f = 0; f < sys.factors.size(); ++f) {
    const auto& block = sys.factors[f];
    const Eigen::Index dim = block.jacobian.cols();
    for (Eigen::Index c = 0; c < dim; ++c) {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
      d(c) = h;
      const Eigen::VectorXd fd = (factor_residual(problem, est, opt, f, d) -
                                  factor_residual(problem, est, opt, f, -d)) /
                                 (2.0 * h);
      for (Eigen::Index r = 0; r < fd.size(); ++r) {
        const double j = block.jacobian(r, c);
        worst = std::max(worst, std::abs(fd(r) - j) / std::max(1.0, std::abs(j)));
      }
    }
  }
  return worst;
}

void run_smoothing_batch(Context& ctx) {
  ScenarioConfig base = ctx.scenario(batch_scenario());
  if (ctx.spec.steps) base.duration = static_cast<double>(*ctx.spec.steps) * base.dt;
  base.validate();
  const std::size_t n_seeds = th::kBatchSeeds;

  struct Cell {
    SolveResult solve;
    std::size_t plateau = 0;
  };
  std::vector<Cell> cells(n_seeds * std::size(kParams));
  parallel_for(cells.size(), ctx.spec.threads, [&](std::size_t i) {
    const std::size_t seed = i / std::size(kParams);
    SmootherOptions opt;
    opt.param = kParams[i % std::size(kParams)];
    const Trajectory traj = simulate(base, base.seed + seed);
    const FactorGraphProblem problem =
        make_problem(traj, batch_prior(base), odometry_step_covariance(base));
    cells[i].solve = gn_solve(problem, problem.dead_reckoning(), opt);
    cells[i].plateau = cells[i].solve.iterations_to_plateau(th::kPlateauFraction);
  });

  ctx.out.file("batch_iterations.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"seed", "param", "iter", "cost", "step_norm"});
    for (std::size_t i = 0; i < cells.size(); ++i) {
      for (const auto& e : cells[i].solve.log) {
        csv.row() << static_cast<unsigned long>(base.seed + i / std::size(kParams))
                  << std::string_view(to_string(kParams[i % std::size(kParams)]))
                  << static_cast<unsigned long>(e.iter) << e.cost << e.step_norm;
        csv.end_row();
      }
    }
  });
  ctx.out.file("batch_summary.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"seed", "param", "plateau_iters", "iterations", "final_cost", "converged"});
    for (std::size_t i = 0; i < cells.size(); ++i) {
      csv.row() << static_cast<unsigned long>(base.seed + i / std::size(kParams))
                << std::string_view(to_string(kParams[i % std::size(kParams)]))
                << static_cast<unsigned long>(cells[i].plateau)
                << static_cast<unsigned long>(cells[i].solve.iterations())
                << cells[i].solve.final_cost() << (cells[i].solve.converged ? 1 : 0);
      csv.end_row();
    }
  });

  std::vector<double> med(std::size(kParams));
  for (std::size_t p = 0; p < std::size(kParams); ++p) {
    std::vector<double> v;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      v.push_back(static_cast<double>(cells[s * std::size(kParams) + p].plateau));
    }
    med[p] = median(v);
    ctx.fact(std::string("median_plateau_iters.") + to_string(kParams[p]), med[p]);
  }
  for (std::size_t p = 1; p < std::size(kParams); ++p) {
    ctx.check(std::string("invariant_plateau_iters_below_") + to_string(kParams[p]),
              med[0], "<", med[p]);
  }

  // Jacobians against finite differences, at the dead-reckoning point (zero
  // propagation residuals) and at a perturbed one.
  const Trajectory traj = simulate(base, base.seed);
  const FactorGraphProblem problem =
      make_problem(traj, batch_prior(base), odometry_step_covariance(base));
  const std::vector<Se2> dr = problem.dead_reckoning();
  std::vector<Se2> shaken = dr;
  CounterRng rng(base.seed ^ 0x6a6163ULL);
  for (auto& e : shaken) {
    e = Se2(e.heading() + 0.3 * rng.normal(),
            e.position() + 0.5 * Vec2(rng.normal(), rng.normal()));
  }
  double fd_error = 0.0;
  for (auto param : kParams) {
    SmootherOptions opt;
    opt.param = param;
    fd_error = std::max(fd_error, jacobian_fd_error(problem, dr, opt));
    opt.exact_propagation_jacobian = true;
    fd_error = std::max(fd_error, jacobian_fd_error(problem, shaken, opt));
  }
  SmootherOptions inv;
  inv.prior_jacobian_identity = true;
  const Eigen::MatrixXd info_a = build_linearization(problem, dr, inv).information();
  const Eigen::MatrixXd info_b = build_linearization(problem, shaken, inv).information();
  const double info_gap = (info_a - info_b).cwiseAbs().maxCoeff();

  ctx.fact("scenario.seeds", static_cast<double>(n_seeds));
  ctx.fact("scenario.states", static_cast<double>(problem.num_states()));
  ctx.fact("scenario.heading_offset", kBatchHeadingOffset);
  ctx.check("jacobian_fd_max_error", fd_error, "<", th::kJacobianFd);
  ctx.check("invariant_information_gap", info_gap, "<", th::kInformationIndependence);
}

ScenarioConfig window_scenario() {
  ScenarioConfig c;
  c.dt = 0.1;
  c.duration = 80.0;
  c.meas_period = 0.7;
  c.omega = Profile::sinusoid(0.0, 0.4, 0.05);
  c.u = Profile::constant(0.5);
  c.gps_cov = 1e-5 * Mat2::Identity();
  c.gps_noise = true;
  c.odom_cov_x = 1e-3;
  c.odom_cov_omega = 1e-3;
  c.odom_noise = true;
  return c;
}

constexpr double kWindowPriorHeading = 9.0 * kPi / 10.0;
constexpr std::size_t kWindowSize = 5;
constexpr std::size_t kWindowIters = 7;

void run_smoothing_window(Context& ctx) {
  ScenarioConfig base = ctx.scenario(window_scenario());
  if (ctx.spec.steps) base.duration = static_cast<double>(*ctx.spec.steps) * base.dt;
  base.validate();
  const std::size_t n_seeds = th::kWindowSeeds;
  PriorFactor prior;
  prior.mean = Se2(kWindowPriorHeading, Vec2(0.25, 0.25));
  prior.cov = Vec3(kPi * kPi / 16.0, 0.125, 0.125).asDiagonal();

  struct Cell {
    double heading_rmse = 0.0;
    double position_rmse = 0.0;
  };
  std::vector<Cell> cells(n_seeds * std::size(kParams));
  parallel_for(cells.size(), ctx.spec.threads, [&](std::size_t i) {
    const std::size_t seed = i / std::size(kParams);
    const Trajectory traj = simulate(base, base.seed + seed);
    const FactorGraphProblem problem =
        make_problem(traj, prior, odometry_step_covariance(base));
    WindowOptions opt;
    opt.smoother.param = kParams[i % std::size(kParams)];
    opt.smoother.prior_jacobian_identity = true;
    opt.window_size = kWindowSize;
    opt.gn_iters_per_step = kWindowIters;
    WindowTrace trace;
    try {
      trace = sliding_window_run(problem, opt);
    } catch (const StepError&) {
      // Estimate ran off until the normal equations went singular.
      const double inf = std::numeric_limits<double>::infinity();
      cells[i] = {inf, inf};
      return;
    }
    double sh = 0.0, sp = 0.0;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      const Se2& e = trace.final_estimates[k];
      const double dh = wrap_angle(e.heading() - traj.states[k].heading);
      sh += dh * dh;
      sp += (e.position() - traj.states[k].position).squaredNorm();
    }
    const double m = static_cast<double>(traj.states.size());
    cells[i] = {std::sqrt(sh / m), std::sqrt(sp / m)};
  });

  ctx.out.file("window_rmse.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"seed", "param", "heading_rmse", "position_rmse"});
    for (std::size_t i = 0; i < cells.size(); ++i) {
      csv.row() << static_cast<unsigned long>(base.seed + i / std::size(kParams))
                << std::string_view(to_string(kParams[i % std::size(kParams)]))
                << cells[i].heading_rmse << cells[i].position_rmse;
      csv.end_row();
    }
  });
  std::vector<double> med(std::size(kParams));
  for (std::size_t p = 0; p < std::size(kParams); ++p) {
    std::vector<double> h;
    std::size_t flipped = 0;
    std::size_t diverged = 0;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const double v = cells[s * std::size(kParams) + p].heading_rmse;
      h.push_back(v);
      if (v > kPi / 2.0) ++flipped;
      if (std::isinf(v)) ++diverged;
    }
    med[p] = median(h);
    ctx.fact(std::string("median_heading_rmse.") + to_string(kParams[p]), med[p]);
    ctx.fact(std::string("runs_above_half_pi.") + to_string(kParams[p]),
             static_cast<double>(flipped));
    ctx.fact(std::string("runs_diverged.") + to_string(kParams[p]),
             static_cast<double>(diverged));
  }
  ctx.fact("scenario.seeds", static_cast<double>(n_seeds));
  ctx.fact("scenario.window_size", static_cast<double>(kWindowSize));
  ctx.fact("scenario.gn_iters_per_step", static_cast<double>(kWindowIters));
  for (std::size_t p = 1; p < std::size(kParams); ++p) {
    ctx.check(std::string("invariant_heading_rmse_below_") + to_string(kParams[p]),
              med[0], "<", med[p]);
  }
}

// ---------------------------------------------------------------- registry

struct Entry {
  ExperimentInfo info;
  std::function<void(Context&)> run;
};

std::string describe_scenario(const ScenarioConfig& c,
                              std::initializer_list<std::string> extra) {
  std::ostringstream os;
  os << scenario_to_json(c).dump() << "\n";
  for (const auto& e : extra) os << e << "\n";
  return os.str();
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> v;
    v.push_back({{"fig1-manifold",
                  "invariant filter estimates stay on the manifold R(theta)^T x = b "
                  "between and across updates while EKF updates leave it; the invariant "
                  "filter is also left-invariant under a change of frame, the EKF is not",
                  describe_scenario(fig1_scenario(),
                                    {"heading_error_deg=40",
                                     "witness_frame=(1.0, [3, -2])",
                                     "--steps sets the number of simulation steps"})},
                 run_fig1});
    v.push_back({{"fig2-odometer",
                  "on a straight line the invariant filter keeps the odometric "
                  "distance |x_hat| = alpha(t) exactly; the EKF loses it",
                  describe_scenario(fig2_scenario(),
                                    {"heading_error_deg=40",
                                     "metric=max_t | ||x_hat_t|| - alpha(t) |",
                                     "--steps sets the number of updates"})},
                 run_fig2});
    v.push_back({{"fig3-convergence",
                  "noise-free observer, one million updates: EKF errors stall, the "
                  "invariant filter error goes to zero",
                  describe_scenario(straight_line(1.0, th::kLongRunSteps),
                                    {"runs=ekf 5deg, ekf 40deg, iekf 5deg, iekf 40deg",
                                     "--steps sets the number of updates"})},
                 run_fig3});
    v.push_back({{"thm3-residual",
                  "invariant filter manifold residual stays at round-off for random "
                  "initial headings, two omega profiles, with and without GPS noise",
                  describe_scenario(thm3_scenario(),
                                    {"headings=20 uniform in (-pi, pi)",
                                     "omega_profiles=constant 0.5, 0.1 + 0.5 sin(2 pi 0.2 t)",
                                     "--steps sets the steps per run"})},
                 run_thm3});
    v.push_back({{"thm4-rates",
                  "heading error ~ n^-3 and position error ~ n^-2 on a noise-free "
                  "straight line; an antipodal heading error stays put",
                  describe_scenario(straight_line(kRateDeltaT, th::kRateFitHi),
                                    {"p0=pi/2", "r=1", "heading_error_deg=40",
                                     "fit_window=[1e3, 1e5]",
                                     "--steps sets the number of updates"})},
                 run_thm4});
    v.push_back({{"prop1-linear",
                  "linear Kalman filter with deterministic dynamics keeps C_t x_hat = "
                  "alpha and C_t P C_t^T = 0",
                  "system=planar double integrator, dt=0.01, N=0.5 I\n"
                  "x0=(0, 0, 1, -0.5), P0=diag(0, 0, 4, 4), C0=[I 0]\n"
                  "--steps sets the number of steps\n"},
                 run_prop1});
    v.push_back({{"appB-crosscheck",
                  "closed-form Riccati solution and scalar heading recursion against "
                  "the full invariant filter",
                  describe_scenario(straight_line(kRateDeltaT, th::kScalarRecursionUpdates),
                                    {"p0=pi/2", "r=1", "heading_error_deg=40",
                                     "closed_form_n=1e5",
                                     "--steps sets the number of filter updates"})},
                 run_appb});
    v.push_back({{"smoothing-batch",
                  "batch Gauss-Newton: the invariant parametrization reaches its cost "
                  "plateau in fewer iterations than linear, grisetti and forster; "
                  "Jacobians match finite differences; invariant information is "
                  "estimate independent",
                  describe_scenario(batch_scenario(),
                                    {"prior_heading_offset=-3pi/4",
                                     "P0=diag((3pi/4)^2, 0.0025, 0.0025)",
                                     "init=dead reckoning from the prior mean",
                                     "seeds=10", "plateau=within 1% of the final cost",
                                     "--steps sets the number of steps"})},
                 run_smoothing_batch});
    v.push_back({{"smoothing-window",
                  "sliding-window smoothing from a 9pi/10 heading prior: non-invariant "
                  "parametrizations can settle with the estimate turned around, the "
                  "invariant one does not (median heading RMSE)",
                  describe_scenario(window_scenario(),
                                    {"prior=(9pi/10, [0.25, 0.25])",
                                     "P0=diag((pi/4)^2, 1/8, 1/8)", "window=5",
                                     "gn_iters_per_step=7", "seeds=100",
                                     "--steps sets the number of steps"})},
                 run_smoothing_window});
    return v;
  }();
  return entries;
}

const Entry& find(const std::string& name) {
  for (const auto& e : registry()) {
    if (e.info.name == name) return e;
  }
  throw UnknownExperiment("unknown experiment '" + name + "'");
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> infos = [] {
    std::vector<ExperimentInfo> v;
    for (const auto& e : registry()) v.push_back(e.info);
    return v;
  }();
  return infos;
}

const ExperimentInfo& describe_experiment(const std::string& name) {
  return find(name).info;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const Entry& entry = find(spec.name);
  ExperimentResult result;
  result.name = spec.name;
  Context ctx{spec, result, Outputs(spec.out_dir, result)};
  entry.run(ctx);
  ctx.out.file("summary.txt", [&](std::ostream& os) { write_summary_text(os, result); });
  ctx.out.file("summary.json", [&](std::ostream& os) { write_summary_json(os, result); });
  return result;
}

void write_summary_text(std::ostream& os, const ExperimentResult& result) {
  os << "experiment=" << result.name << "\n";
  os << "pass=" << (result.passed() ? "true" : "false") << "\n";
  for (const auto& c : result.checks) {
    os << "check." << c.name << ".measured=" << fmt(c.measured) << "\n";
    os << "check." << c.name << ".relation=" << c.relation << "\n";
    os << "check." << c.name << ".threshold=" << fmt(c.threshold) << "\n";
    os << "check." << c.name << ".pass=" << (c.pass ? "true" : "false") << "\n";
  }
  for (const auto& [k, v] : result.facts) os << "fact." << k << "=" << v << "\n";
}

void write_summary_json(std::ostream& os, const ExperimentResult& result) {
  nlohmann::ordered_json doc;
  doc["experiment"] = result.name;
  doc["pass"] = result.passed();
  doc["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : result.checks) {
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["measured"] = std::isfinite(c.measured) ? nlohmann::ordered_json(c.measured)
                                              : nlohmann::ordered_json(fmt(c.measured));
    j["relation"] = c.relation;
    j["threshold"] = c.threshold;
    j["pass"] = c.pass;
    doc["checks"].push_back(j);
  }
  nlohmann::ordered_json facts = nlohmann::ordered_json::object();
  for (const auto& [k, v] : result.facts) facts[k] = v;
  doc["facts"] = facts;
  os << doc.dump(2) << "\n";
}

}  // namespace invnav
