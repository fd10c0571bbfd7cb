#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "invnav/errors.hpp"
#include "invnav/smoothing.hpp"
#include "oracles.hpp"

using namespace invnav;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Parametrization kAll[] = {Parametrization::Invariant, Parametrization::Linear,
                                    Parametrization::Grisetti, Parametrization::Forster};

// ---- Test-side model: poses as (theta, x) with homogeneous matrices built
// from oracle::homogeneous, and the exponential from oracle::expm.

struct Pose {
  double theta;
  Eigen::Vector2d x;
};

Pose from_se2(const Se2& g) { return {g.heading(), g.position()}; }

Eigen::Matrix3d mat(const Pose& p) { return oracle::homogeneous(p.theta, p.x(0), p.x(1)); }

Eigen::Matrix2d rot(double t) { return mat({t, Eigen::Vector2d::Zero()}).topLeftCorner<2, 2>(); }

Eigen::Matrix3d expm3(const Eigen::Vector3d& xi) {
  return oracle::expm(oracle::wedge(xi(0), xi(1), xi(2)));
}

Eigen::Vector3d logm3(const Eigen::Matrix3d& m) {
  const double t = std::atan2(m(1, 0), m(0, 0));
  Eigen::Matrix2d v = Eigen::Matrix2d::Identity();
  if (std::abs(t) > 1e-12) {
    v << std::sin(t) / t, -(1 - std::cos(t)) / t, (1 - std::cos(t)) / t, std::sin(t) / t;
  }
  const Eigen::Vector2d p = v.inverse() * m.topRightCorner<2, 1>();
  return {t, p(0), p(1)};
}

double wrap(double a) { return std::remainder(a, 2 * kPi); }

Pose retract_ref(Parametrization param, const Pose& p, const Eigen::Vector3d& xi) {
  switch (param) {
    case Parametrization::Invariant: {
      const Eigen::Matrix3d m = mat(p) * expm3(xi);
      // Keep the heading unwrapped by adding the increment.
      return {p.theta + xi(0), m.topRightCorner<2, 1>()};
    }
    case Parametrization::Linear:
    case Parametrization::Grisetti:
      return {p.theta + xi(0), p.x + xi.tail<2>()};
    case Parametrization::Forster:
      return {p.theta + xi(0), p.x + rot(p.theta) * xi.tail<2>()};
  }
  return p;
}

Eigen::VectorXd prior_ref(Parametrization param, const Pose& mean, const Pose& p) {
  Eigen::Vector3d r;
  switch (param) {
    case Parametrization::Invariant:
      return logm3(mat(mean).inverse() * mat(p));
    case Parametrization::Linear:
      r << p.theta - mean.theta, p.x - mean.x;
      return r;
    case Parametrization::Grisetti:
      r << wrap(p.theta - mean.theta), p.x - mean.x;
      return r;
    case Parametrization::Forster:
      r << wrap(p.theta - mean.theta), rot(mean.theta).transpose() * (p.x - mean.x);
      return r;
  }
  return r;
}

Eigen::VectorXd prop_ref(Parametrization param, const Pose& inc, const Pose& a,
                         const Pose& b) {
  const double w = inc.theta;
  const Eigen::Vector2d& u = inc.x;
  const Eigen::Vector2d dx = b.x - a.x;
  Eigen::Vector3d r;
  switch (param) {
    case Parametrization::Invariant:
      return logm3(mat(inc).inverse() * mat(a).inverse() * mat(b));
    case Parametrization::Linear:
      r << b.theta - a.theta - w, dx - rot(a.theta) * u;
      return r;
    case Parametrization::Grisetti:
      r << wrap(b.theta - a.theta - w), rot(w).transpose() * (rot(a.theta).transpose() * dx - u);
      return r;
    case Parametrization::Forster:
      r << wrap(b.theta - a.theta - w), rot(a.theta).transpose() * dx - u;
      return r;
  }
  return r;
}

Eigen::VectorXd obs_ref(Parametrization param, const Eigen::Vector2d& y, const Pose& p) {
  if (param == Parametrization::Invariant) {
    return rot(p.theta).transpose() * (y - p.x);
  }
  return p.x - y;
}

// ---- Problem fixtures.

Eigen::Matrix3d random_spd3(std::mt19937_64& gen, double scale) {
  std::normal_distribution<double> n;
  Eigen::Matrix3d a;
  for (int i = 0; i < 9; ++i) a(i) = n(gen);
  return scale * (a * a.transpose() + 0.5 * Eigen::Matrix3d::Identity());
}

FactorGraphProblem random_problem(std::mt19937_64& gen, std::size_t states,
                                  bool isotropic = false) {
  std::uniform_real_distribution<double> w(-0.4, 0.4), v(0.2, 1.5), p(-3.0, 3.0);
  FactorGraphProblem prob;
  prob.dt = 0.1;
  prob.prior.mean = Se2(w(gen) * 5, Vec2(p(gen), p(gen)));
  prob.prior.cov = random_spd3(gen, 0.1);
  for (std::size_t i = 0; i + 1 < states; ++i) {
    prob.propagation.push_back({exp(Tangent3(w(gen), v(gen), 0.0)), random_spd3(gen, 0.01)});
  }
  for (std::size_t s = 1; s < states; s += 2) {
    Mat2 n = Mat2::Identity() * 0.3;
    if (!isotropic) n << 0.3, 0.05, 0.05, 0.2;
    prob.observations.push_back({s, Vec2(p(gen), p(gen)), n});
  }
  return prob;
}

std::vector<Se2> perturbed(const std::vector<Se2>& base, std::mt19937_64& gen, double size) {
  std::uniform_real_distribution<double> d(-size, size);
  std::vector<Se2> out;
  for (const auto& g : base) out.push_back(Se2(g.heading() + d(gen), g.position() + Vec2(d(gen), d(gen))));
  return out;
}

// Residual of factor `index` after perturbing its states by xi, evaluated
// entirely with the test-side model.
Eigen::VectorXd ref_factor(const FactorGraphProblem& prob, const std::vector<Se2>& est,
                           Parametrization param, std::size_t index,
                           const Eigen::VectorXd& xi) {
  const std::size_t n_prop = prob.propagation.size();
  if (index == 0) {
    return prior_ref(param, from_se2(prob.prior.mean),
                     retract_ref(param, from_se2(est[0]), xi.head<3>()));
  }
  if (index <= n_prop) {
    const std::size_t i = index - 1;
    return prop_ref(param, from_se2(prob.propagation[i].increment),
                    retract_ref(param, from_se2(est[i]), xi.head<3>()),
                    retract_ref(param, from_se2(est[i + 1]), xi.segment<3>(3)));
  }
  const ObservationFactor& o = prob.observations[index - 1 - n_prop];
  if (param == Parametrization::Invariant) {
    // y = chi d + v seen in the frame of the estimate: c = exp(xi) d + noise.
    const Pose p = from_se2(est[o.state]);
    return obs_ref(param, o.y, p) - expm3(xi.head<3>()).topRightCorner<2, 1>();
  }
  return obs_ref(param, o.y, retract_ref(param, from_se2(est[o.state]), xi.head<3>()));
}

double max_jacobian_error(const FactorGraphProblem& prob, const std::vector<Se2>& est,
                          const SmootherOptions& opt, bool skip_invariant_prop) {
  const LinearizedSystem sys = build_linearization(prob, est, opt);
  double worst = 0.0;
  for (std::size_t f = 0; f < sys.factors.size(); ++f) {
    const bool is_prop = f >= 1 && f <= prob.propagation.size();
    if (skip_invariant_prop && is_prop && opt.param == Parametrization::Invariant) continue;
    const auto& block = sys.factors[f];
    const int dim = static_cast<int>(block.jacobian.cols());
    const Eigen::MatrixXd fd = oracle::central_difference(
        [&](const Eigen::VectorXd& xi) { return ref_factor(prob, est, opt.param, f, xi); },
        dim);
    worst = std::max(worst, (block.jacobian - fd).cwiseAbs().maxCoeff());
    const Eigen::VectorXd r0 = ref_factor(prob, est, opt.param, f, Eigen::VectorXd::Zero(dim));
    EXPECT_NEAR((block.residual - r0).norm(), 0.0, 1e-10) << to_string(opt.param) << " " << f;
  }
  return worst;
}

ScenarioConfig noise_free_line() {
  ScenarioConfig c;
  c.dt = 0.1;
  c.duration = 3.0;
  c.meas_period = 0.5;
  c.omega = Profile::sinusoid(0.0, 0.3, 0.2);
  c.u = Profile::constant(2.0);
  c.gps_cov = 0.01 * Mat2::Identity();
  c.gps_noise = false;
  c.theta0 = 0.4;
  return c;
}

FactorGraphProblem noisy_problem(std::uint64_t seed, double duration, double heading_offset) {
  ScenarioConfig c = noise_free_line();
  c.duration = duration;
  c.gps_noise = true;
  c.odom_noise = true;
  c.odom_cov_x = 0.1;
  c.odom_cov_omega = 0.01;
  const Trajectory traj = simulate(c, seed);
  PriorFactor prior;
  prior.mean = Se2(c.theta0 + heading_offset, traj.states[0].position);
  prior.cov = Vec3(heading_offset * heading_offset + 0.01, 0.0025, 0.0025).asDiagonal();
  return make_problem(traj, prior, odometry_step_covariance(c) + 1e-8 * Mat3::Identity());
}

}  // namespace

TEST(ParametrizationNames, RoundTrip) {
  for (auto p : kAll) EXPECT_EQ(parametrization_from_string(to_string(p)), p);
  EXPECT_THROW(parametrization_from_string("euclid"), BadConfig);
}

TEST(Problem, MakeProblemAndDeadReckoning) {
  ScenarioConfig c = noise_free_line();
  c.odom_cov_x = 0.1;
  c.odom_cov_omega = 0.01;
  const Trajectory traj = simulate(c, 0);
  const Mat3 q = odometry_step_covariance(c);
  EXPECT_NEAR((q - Vec3(0.01 * 0.01, 0.1 * 0.01, 0.1 * 0.01).asDiagonal().toDenseMatrix()).norm(),
              0.0, 1e-18);
  const FactorGraphProblem prob = make_problem(traj, {traj.states[0].pose(), Mat3::Identity()}, q);
  EXPECT_EQ(prob.num_states(), traj.states.size());
  EXPECT_EQ(prob.observations.size(), traj.measurements.size());
  const auto dr = prob.dead_reckoning();
  for (std::size_t k = 0; k < dr.size(); ++k) {
    EXPECT_NEAR((dr[k].matrix() - traj.states[k].pose().matrix()).norm(), 0.0, 1e-12);
  }
}

TEST(Linearization, TruthGivesZeroResiduals) {
  const Trajectory traj = simulate(noise_free_line(), 0);
  const FactorGraphProblem prob =
      make_problem(traj, {traj.states[0].pose(), 0.1 * Mat3::Identity()}, 0.01 * Mat3::Identity());
  std::vector<Se2> truth;
  for (const auto& s : traj.states) truth.push_back(s.pose());
  for (auto p : kAll) {
    SmootherOptions opt;
    opt.param = p;
    const LinearizedSystem sys = build_linearization(prob, truth, opt);
    EXPECT_LT(sys.whitened_residual().cwiseAbs().maxCoeff(), 1e-10) << to_string(p);
    EXPECT_EQ(sys.factors.size(), 1 + prob.propagation.size() + prob.observations.size());
    EXPECT_EQ(sys.num_rows(), 3 + 3 * prob.propagation.size() + 2 * prob.observations.size());
  }
}

TEST(Linearization, JacobiansMatchFiniteDifferences) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 5; ++trial) {
    const FactorGraphProblem prob = random_problem(gen, 6);
    const auto dr = prob.dead_reckoning();
    const auto moved = perturbed(dr, gen, 0.5);
    for (auto p : kAll) {
      SmootherOptions opt;
      opt.param = p;
      // Perturbed point: every factor except the first-order invariant
      // propagation, whose Jacobian is exact only where its residual vanishes.
      EXPECT_LT(max_jacobian_error(prob, moved, opt, true), 1e-6) << to_string(p);
      EXPECT_LT(max_jacobian_error(prob, dr, opt, false), 1e-6) << to_string(p);
    }
    SmootherOptions exact;
    exact.exact_propagation_jacobian = true;
    EXPECT_LT(max_jacobian_error(prob, moved, exact, false), 1e-6);
  }
}

TEST(Linearization, FactorResidualMatchesTestModel) {
  std::mt19937_64 gen(22);
  const FactorGraphProblem prob = random_problem(gen, 5);
  const auto est = perturbed(prob.dead_reckoning(), gen, 0.3);
  std::uniform_real_distribution<double> d(-0.05, 0.05);
  for (auto p : kAll) {
    SmootherOptions opt;
    opt.param = p;
    const std::size_t factors = 1 + prob.propagation.size() + prob.observations.size();
    for (std::size_t f = 0; f < factors; ++f) {
      const int dim = (f >= 1 && f <= prob.propagation.size()) ? 6 : 3;
      Eigen::VectorXd xi(dim);
      for (int k = 0; k < dim; ++k) xi(k) = d(gen);
      EXPECT_NEAR((factor_residual(prob, est, opt, f, xi) - ref_factor(prob, est, p, f, xi)).norm(),
                  0.0, 1e-10)
          << to_string(p) << " factor " << f;
    }
  }
}

TEST(Linearization, InvariantPropagationJacobianIsMinusAdjoint) {
  std::mt19937_64 gen(23);
  const FactorGraphProblem prob = random_problem(gen, 4);
  const auto est = perturbed(prob.dead_reckoning(), gen, 1.0);
  const LinearizedSystem sys = build_linearization(prob, est, {});
  for (std::size_t i = 0; i < prob.propagation.size(); ++i) {
    const auto& j = sys.factors[1 + i].jacobian;
    const Mat3 ad = adjoint(prob.propagation[i].increment.inverse());
    EXPECT_NEAR((j.leftCols<3>() + ad).norm(), 0.0, 1e-14);
    EXPECT_NEAR((j.rightCols<3>() - Eigen::Matrix3d::Identity()).norm(), 0.0, 1e-15);
  }
}

TEST(Linearization, InvariantInformationIsEstimateIndependent) {
  std::mt19937_64 gen(24);
  const FactorGraphProblem prob = random_problem(gen, 8, true);
  SmootherOptions opt;
  opt.prior_jacobian_identity = true;
  const auto a = perturbed(prob.dead_reckoning(), gen, 2.0);
  const auto b = perturbed(prob.dead_reckoning(), gen, 2.0);
  const Eigen::MatrixXd ia = build_linearization(prob, a, opt).information();
  const Eigen::MatrixXd ib = build_linearization(prob, b, opt).information();
  EXPECT_LT((ia - ib).cwiseAbs().maxCoeff(), 1e-12 * ia.cwiseAbs().maxCoeff());

  // Without the identity approximation only the prior block moves.
  const Eigen::MatrixXd ja = build_linearization(prob, a, {}).information();
  const Eigen::MatrixXd jb = build_linearization(prob, b, {}).information();
  Eigen::MatrixXd diff = ja - jb;
  diff.topLeftCorner<3, 3>().setZero();
  EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-12 * ja.cwiseAbs().maxCoeff());

  // A non-invariant parametrization does depend on the estimate.
  SmootherOptions lin;
  lin.param = Parametrization::Linear;
  const Eigen::MatrixXd la = build_linearization(prob, a, lin).information();
  const Eigen::MatrixXd lb = build_linearization(prob, b, lin).information();
  EXPECT_GT((la - lb).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Linearization, PriorJacobianFixesItsResidual) {
  std::mt19937_64 gen(25);
  const FactorGraphProblem prob = random_problem(gen, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto est = perturbed(prob.dead_reckoning(), gen, 1.5);
    const FactorBlock prior = build_linearization(prob, est, {}).factors[0];
    EXPECT_NEAR((prior.jacobian * prior.residual - prior.residual).norm(), 0.0, 1e-10);
  }
}

TEST(Linearization, WindowMismatch) {
  std::mt19937_64 gen(26);
  FactorGraphProblem prob = random_problem(gen, 4);
  auto est = prob.dead_reckoning();
  est.pop_back();
  EXPECT_THROW(build_linearization(prob, est, {}), WindowMismatch);
  prob.observations.push_back({9, Vec2::Zero(), Mat2::Identity()});
  EXPECT_THROW(build_linearization(prob, prob.dead_reckoning(), {}), WindowMismatch);
}

TEST(GaussNewton, TruthConvergesInOneIteration) {
  const Trajectory traj = simulate(noise_free_line(), 0);
  const FactorGraphProblem prob =
      make_problem(traj, {traj.states[0].pose(), 0.1 * Mat3::Identity()}, 0.01 * Mat3::Identity());
  std::vector<Se2> truth;
  for (const auto& s : traj.states) truth.push_back(s.pose());
  for (auto p : kAll) {
    SmootherOptions opt;
    opt.param = p;
    const SolveResult res = gn_solve(prob, truth, opt);
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.iterations(), 1u);
    EXPECT_LT(res.log.back().step_norm, 1e-10);
  }
}

TEST(GaussNewton, PriorOnlyReturnsPriorMean) {
  FactorGraphProblem prob;
  prob.prior.mean = Se2(0.8, Vec2(1.0, -2.0));
  prob.prior.cov = Vec3(0.1, 1.0, 2.0).asDiagonal();
  for (auto p : kAll) {
    SmootherOptions opt;
    opt.param = p;
    const SolveResult res = gn_solve(prob, {Se2(-0.4, Vec2(3.0, 3.0))}, opt);
    EXPECT_NEAR((res.estimates[0].matrix() - prob.prior.mean.matrix()).norm(), 0.0, 1e-10)
        << to_string(p);
    EXPECT_NEAR(res.final_cost(), 0.0, 1e-18);
  }
}

TEST(GaussNewton, AllParametrizationsReachTheSameMinimum) {
  const FactorGraphProblem prob = noisy_problem(3, 3.0, 0.3);
  const auto init = prob.dead_reckoning();
  SolveResult reference;
  for (auto p : kAll) {
    if (p == Parametrization::Invariant) continue;
    SmootherOptions opt;
    opt.param = p;
    const SolveResult res = gn_solve(prob, init, opt);
    EXPECT_TRUE(res.converged) << to_string(p);
    if (reference.estimates.empty()) {
      reference = res;
      continue;
    }
    for (std::size_t k = 0; k < res.estimates.size(); ++k) {
      EXPECT_NEAR((res.estimates[k].matrix() - reference.estimates[k].matrix()).norm(), 0.0, 1e-8);
    }
  }
}

TEST(GaussNewton, RankDeficientSystemThrows) {
  std::mt19937_64 gen(27);
  FactorGraphProblem prob = random_problem(gen, 3);
  prob.observations.clear();
  prob.prior.cov = 1e40 * Mat3::Identity();
  EXPECT_THROW(gn_solve(prob, prob.dead_reckoning(), {}), SingularNormalEquations);
}

TEST(GaussNewton, LineSearchNeverIncreasesCost) {
  const FactorGraphProblem prob = noisy_problem(5, 10.0, -3 * kPi / 4);
  for (auto p : kAll) {
    SmootherOptions opt;
    opt.param = p;
    opt.line_search = true;
    opt.max_iters = 20;
    const SolveResult res = gn_solve(prob, prob.dead_reckoning(), opt);
    for (std::size_t k = 1; k < res.log.size(); ++k) {
      EXPECT_LE(res.log[k].cost, res.log[k - 1].cost * (1 + 1e-12)) << to_string(p) << " " << k;
    }
  }
}

TEST(GaussNewton, InvariantIteratesAreLeftEquivariant) {
  const FactorGraphProblem prob = noisy_problem(6, 3.0, 1.0);
  const Se2 g(2.0, Vec2(10.0, -4.0));
  FactorGraphProblem moved = prob;
  moved.prior.mean = g * prob.prior.mean;
  const Mat2 r = g.rotation_matrix();
  for (auto& o : moved.observations) {
    o.y = g.act(o.y);
    o.cov = r * o.cov * r.transpose();
  }
  for (std::size_t iters = 1; iters <= 4; ++iters) {
    SmootherOptions opt;
    opt.max_iters = iters;
    opt.tol = 0.0;
    const SolveResult a = gn_solve(prob, prob.dead_reckoning(), opt);
    const SolveResult b = gn_solve(moved, moved.dead_reckoning(), opt);
    for (std::size_t k = 0; k < a.estimates.size(); ++k) {
      EXPECT_NEAR(((g * a.estimates[k]).matrix() - b.estimates[k].matrix()).norm(), 0.0, 1e-9);
    }
    EXPECT_NEAR(a.final_cost(), b.final_cost(), 1e-9 * (1.0 + a.final_cost()));
  }
}

TEST(SolveResult, PlateauIteration) {
  SolveResult res;
  res.log = {{0, 1000.0, 0.0}, {1, 50.0, 1.0}, {2, 10.05, 1.0}, {3, 10.0, 1e-3}, {4, 10.0, 1e-12}};
  EXPECT_EQ(res.iterations(), 4u);
  EXPECT_EQ(res.final_cost(), 10.0);
  EXPECT_EQ(res.iterations_to_plateau(0.01), 2u);
  EXPECT_EQ(res.iterations_to_plateau(0.001), 3u);
}

TEST(IterationLogCsv, Format) {
  std::ostringstream os;
  write_iteration_log_csv(os, {{0, 2.5, 0.0}, {1, 0.5, 0.25}});
  EXPECT_EQ(os.str(), "iter,cost,step_norm\n0,2.5,0\n1,0.5,0.25\n");
}

TEST(SlidingWindow, FullWindowEqualsBatch) {
  const FactorGraphProblem prob = noisy_problem(8, 2.0, 0.5);
  ASSERT_EQ(prob.num_states(), 21u);
  for (auto p : kAll) {
    SmootherOptions opt;
    opt.param = p;
    opt.max_iters = 100;
    opt.tol = 1e-13;
    const SolveResult batch = gn_solve(prob, prob.dead_reckoning(), opt);
    WindowOptions wopt;
    wopt.smoother = opt;
    wopt.window_size = 21;
    wopt.gn_iters_per_step = 100;
    const WindowTrace trace = sliding_window_run(prob, wopt);
    ASSERT_EQ(trace.records.size(), 21u);
    for (std::size_t k = 0; k < 21; ++k) {
      EXPECT_NEAR((trace.final_estimates[k].matrix() - batch.estimates[k].matrix()).norm(), 0.0,
                  1e-8)
          << to_string(p) << " state " << k;
    }
  }
}

TEST(SlidingWindow, MarginalizationIsExactOnLinearProblem) {
  // Pinned headings make the Linear parametrization affine in the positions,
  // so every window size yields the same filtering estimate at its head.
  ScenarioConfig c = noise_free_line();
  c.gps_noise = true;
  c.odom_noise = true;
  c.odom_cov_x = 0.1;
  const Trajectory traj = simulate(c, 9);
  PriorFactor prior{Se2(c.theta0, traj.states[0].position + Vec2(0.3, -0.2)),
                    Vec3(1e-14, 0.04, 0.04).asDiagonal()};
  const FactorGraphProblem prob =
      make_problem(traj, prior, Vec3(1e-14, 1e-3, 1e-3).asDiagonal());
  WindowOptions a, b;
  a.smoother.param = b.smoother.param = Parametrization::Linear;
  a.window_size = 2;
  b.window_size = 12;
  a.gn_iters_per_step = b.gn_iters_per_step = 5;
  const WindowTrace ta = sliding_window_run(prob, a);
  const WindowTrace tb = sliding_window_run(prob, b);
  for (std::size_t k = 0; k < ta.records.size(); ++k) {
    EXPECT_NEAR((ta.records[k].head.matrix() - tb.records[k].head.matrix()).norm(), 0.0, 1e-7)
        << "state " << k;
  }
}

TEST(SlidingWindow, Deterministic) {
  const FactorGraphProblem prob = noisy_problem(10, 2.0, 1.0);
  WindowOptions w;
  w.window_size = 5;
  const WindowTrace a = sliding_window_run(prob, w);
  const WindowTrace b = sliding_window_run(prob, w);
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].head.matrix(), b.records[k].head.matrix());
  }
}

TEST(SlidingWindow, Errors) {
  FactorGraphProblem prob = noisy_problem(11, 1.0, 0.2);
  WindowOptions w;
  w.window_size = 1;
  EXPECT_THROW(sliding_window_run(prob, w), BadConfig);
  w.window_size = 3;
  prob.observations[0].cov = Mat2::Zero();
  const std::size_t bad_state = prob.observations[0].state;
  try {
    sliding_window_run(prob, w);
    FAIL() << "expected StepError";
  } catch (const StepError& e) {
    EXPECT_EQ(e.step(), bad_state);
    EXPECT_NEAR(e.time(), static_cast<double>(bad_state) * prob.dt, 1e-12);
  }
}
