#include "invnav/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include "invnav/csv.hpp"
#include "invnav/errors.hpp"

namespace invnav {

namespace {

Mat2 generator() { return rotation_generator(); }

Mat3 block_diag(double a, const Mat2& b) {
  Mat3 m = Mat3::Zero();
  m(0, 0) = a;
  m.block<2, 2>(1, 1) = b;
  return m;
}

FactorBlock unary(std::size_t state, Eigen::VectorXd r, Eigen::MatrixXd j,
                  Eigen::MatrixXd cov) {
  return FactorBlock{{state}, std::move(r), std::move(j), std::move(cov)};
}

FactorBlock prior_block(const PriorFactor& prior, const Se2& est,
                        const SmootherOptions& opt) {
  const double th = est.heading();
  const Vec2& x = est.position();
  const double th_bar = prior.mean.heading();
  const Vec2& x_bar = prior.mean.position();
  Vec3 r;
  Mat3 j = Mat3::Identity();
  switch (opt.param) {
    case Parametrization::Invariant:
      r = log(prior.mean.inverse() * est, 0.0);
      if (!opt.prior_jacobian_identity) j = right_jacobian_inverse(r);
      break;
    case Parametrization::Linear:
      r << th - th_bar, x - x_bar;
      break;
    case Parametrization::Grisetti:
      r << wrap_angle(th - th_bar), x - x_bar;
      break;
    case Parametrization::Forster: {
      const Mat2 rbar_t = rotation_matrix(th_bar).transpose();
      r << wrap_angle(th - th_bar), rbar_t * (x - x_bar);
      j.block<2, 2>(1, 1) = rbar_t * rotation_matrix(th);
      break;
    }
  }
  return unary(0, r, j, prior.cov);
}

FactorBlock propagation_block(const PropagationFactor& f, std::size_t i,
                              const Se2& ei, const Se2& ej,
                              const SmootherOptions& opt) {
  const double w = f.increment.heading();
  const Vec2& u = f.increment.position();
  const double thi = ei.heading();
  const double thj = ej.heading();
  const Vec2 dx = ej.position() - ei.position();
  const Mat2 ri = rotation_matrix(thi);
  const Mat2 jg = generator();

  Vec3 r;
  Mat3 ji = Mat3::Zero();
  Mat3 jj = Mat3::Identity();
  Mat3 cov = f.cov;
  switch (opt.param) {
    case Parametrization::Invariant: {
      const Se2 d = ei.inverse() * ej;
      r = log(f.increment.inverse() * d, 0.0);
      if (opt.exact_propagation_jacobian) {
        const Mat3 jr_inv = right_jacobian_inverse(r);
        ji = -jr_inv * adjoint(d.inverse());
        jj = jr_inv;
      } else {
        ji = -adjoint(f.increment.inverse());
      }
      break;
    }
    case Parametrization::Linear: {
      r << thj - thi - w, dx - ri * u;
      ji(0, 0) = -1.0;
      ji.block<2, 1>(1, 0) = -ri * jg * u;
      ji.block<2, 2>(1, 1) = -Mat2::Identity();
      const Mat3 t = block_diag(1.0, ri * rotation_matrix(w));
      cov = t * f.cov * t.transpose();
      break;
    }
    case Parametrization::Grisetti: {
      const Mat2 m = rotation_matrix(w).transpose() * ri.transpose();
      r << wrap_angle(thj - thi - w), m * dx - rotation_matrix(w).transpose() * u;
      ji(0, 0) = -1.0;
      ji.block<2, 1>(1, 0) = -rotation_matrix(w).transpose() * jg * ri.transpose() * dx;
      ji.block<2, 2>(1, 1) = -m;
      jj.block<2, 2>(1, 1) = m;
      break;
    }
    case Parametrization::Forster: {
      r << wrap_angle(thj - thi - w), ri.transpose() * dx - u;
      ji(0, 0) = -1.0;
      ji.block<2, 1>(1, 0) = -jg * ri.transpose() * dx;
      ji.block<2, 2>(1, 1) = -Mat2::Identity();
      jj.block<2, 2>(1, 1) = ri.transpose() * rotation_matrix(thj);
      const Mat3 t = block_diag(1.0, rotation_matrix(w));
      cov = t * f.cov * t.transpose();
      break;
    }
  }
  Eigen::MatrixXd j(3, 6);
  j << ji, jj;
  return FactorBlock{{i, i + 1}, r, j, cov};
}

FactorBlock observation_block(const ObservationFactor& o, const Se2& est,
                              const SmootherOptions& opt) {
  const Mat2 rot = est.rotation_matrix();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2, 3);
  Eigen::VectorXd r(2);
  Eigen::MatrixXd cov = o.cov;
  switch (opt.param) {
    case Parametrization::Invariant:
      r = rot.transpose() * (o.y - est.position());
      j.block<2, 2>(0, 1) = -Mat2::Identity();
      cov = rot.transpose() * o.cov * rot;
      break;
    case Parametrization::Linear:
    case Parametrization::Grisetti:
      r = est.position() - o.y;
      j.block<2, 2>(0, 1) = Mat2::Identity();
      break;
    case Parametrization::Forster:
      r = est.position() - o.y;
      j.block<2, 2>(0, 1) = rot;
      break;
  }
  return unary(o.state, r, j, cov);
}

// Lower Cholesky factor of a factor covariance.
Eigen::MatrixXd sqrt_cov(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw BadConfig("factor covariance is not positive definite");
  }
  return llt.matrixL();
}

void assemble(const LinearizedSystem& sys, Eigen::MatrixXd* a, Eigen::VectorXd* b) {
  const auto rows = static_cast<Eigen::Index>(sys.num_rows());
  const auto cols = static_cast<Eigen::Index>(3 * sys.num_states);
  if (a) a->setZero(rows, cols);
  if (b) b->setZero(rows);
  Eigen::Index row = 0;
  for (const auto& f : sys.factors) {
    const auto m = f.residual.size();
    const Eigen::MatrixXd chol = sqrt_cov(f.cov);
    const auto l = chol.triangularView<Eigen::Lower>();
    if (b) b->segment(row, m) = l.solve(f.residual);
    if (a) {
      const Eigen::MatrixXd wj = l.solve(f.jacobian);
      for (std::size_t s = 0; s < f.states.size(); ++s) {
        a->block(row, 3 * static_cast<Eigen::Index>(f.states[s]), m, 3) =
            wj.middleCols(3 * static_cast<Eigen::Index>(s), 3);
      }
    }
    row += m;
  }
}

std::vector<Se2> apply_step(Parametrization param, const std::vector<Se2>& est,
                            const Eigen::VectorXd& xi) {
  std::vector<Se2> out(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    out[i] = retract(param, est[i], xi.segment<3>(3 * static_cast<Eigen::Index>(i)));
  }
  return out;
}

}  // namespace

const char* to_string(Parametrization p) {
  switch (p) {
    case Parametrization::Invariant: return "invariant";
    case Parametrization::Linear: return "linear";
    case Parametrization::Grisetti: return "grisetti";
    case Parametrization::Forster: return "forster";
  }
  return "?";
}

Parametrization parametrization_from_string(const std::string& name) {
  for (auto p : {Parametrization::Invariant, Parametrization::Linear,
                 Parametrization::Grisetti, Parametrization::Forster}) {
    if (name == to_string(p)) return p;
  }
  throw BadConfig("unknown parametrization '" + name + "'");
}

std::vector<Se2> FactorGraphProblem::dead_reckoning() const {
  std::vector<Se2> out;
  out.reserve(num_states());
  out.push_back(prior.mean);
  for (const auto& f : propagation) out.push_back(out.back() * f.increment);
  return out;
}

Mat3 odometry_step_covariance(const ScenarioConfig& config) {
  const double dt2 = config.dt * config.dt;
  return Vec3(config.odom_cov_omega * dt2, config.odom_cov_x * dt2,
              config.odom_cov_x * dt2)
      .asDiagonal();
}

FactorGraphProblem make_problem(const Trajectory& traj, const PriorFactor& prior,
                                const Mat3& step_cov) {
  FactorGraphProblem p;
  p.prior = prior;
  p.dt = traj.dt;
  p.propagation.reserve(traj.inputs.size());
  for (const auto& in : traj.inputs) {
    p.propagation.push_back({in.increment(traj.dt), step_cov});
  }
  for (const auto& m : traj.measurements) {
    p.observations.push_back({m.step, m.y, m.cov});
  }
  return p;
}

std::size_t LinearizedSystem::num_rows() const {
  std::size_t n = 0;
  for (const auto& f : factors) n += static_cast<std::size_t>(f.residual.size());
  return n;
}

Eigen::MatrixXd LinearizedSystem::whitened_jacobian() const {
  Eigen::MatrixXd a;
  assemble(*this, &a, nullptr);
  return a;
}

Eigen::VectorXd LinearizedSystem::whitened_residual() const {
  Eigen::VectorXd b;
  assemble(*this, nullptr, &b);
  return b;
}

Eigen::MatrixXd LinearizedSystem::information() const {
  const Eigen::MatrixXd a = whitened_jacobian();
  return a.transpose() * a;
}

double LinearizedSystem::cost() const {
  double c = 0.0;
  for (const auto& f : factors) {
    c += f.residual.dot(f.cov.llt().solve(f.residual));
  }
  return c;
}

Se2 retract(Parametrization param, const Se2& estimate, const Vec3& xi) {
  switch (param) {
    case Parametrization::Invariant:
      return estimate * exp(xi);
    case Parametrization::Linear:
    case Parametrization::Grisetti:
      return Se2(estimate.heading() + xi(0), estimate.position() + xi.tail<2>());
    case Parametrization::Forster:
      return Se2(estimate.heading() + xi(0),
                 estimate.position() + estimate.rotation_matrix() * xi.tail<2>());
  }
  return estimate;
}

LinearizedSystem build_linearization(const FactorGraphProblem& problem,
                                     const std::vector<Se2>& estimates,
                                     const SmootherOptions& options) {
  const std::size_t n = problem.num_states();
  if (estimates.size() != n) {
    throw WindowMismatch("expected " + std::to_string(n) + " estimates, got " +
                         std::to_string(estimates.size()));
  }
  LinearizedSystem sys;
  sys.num_states = n;
  sys.factors.reserve(1 + problem.propagation.size() + problem.observations.size());
  sys.factors.push_back(prior_block(problem.prior, estimates[0], options));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    sys.factors.push_back(propagation_block(problem.propagation[i], i, estimates[i],
                                            estimates[i + 1], options));
  }
  for (const auto& o : problem.observations) {
    if (o.state >= n) {
      throw WindowMismatch("observation on state " + std::to_string(o.state) +
                           " outside a window of " + std::to_string(n));
    }
    sys.factors.push_back(observation_block(o, estimates[o.state], options));
  }
  return sys;
}

Eigen::VectorXd factor_residual(const FactorGraphProblem& problem,
                                const std::vector<Se2>& estimates,
                                const SmootherOptions& options, std::size_t index,
                                const Eigen::VectorXd& xi) {
  const std::size_t n = problem.num_states();
  if (estimates.size() != n) throw WindowMismatch("estimate count differs from the problem");
  const std::size_t n_prop = problem.propagation.size();
  if (index >= 1 + n_prop + problem.observations.size()) {
    throw WindowMismatch("factor index out of range");
  }
  const auto moved = [&](std::size_t state, Eigen::Index offset) {
    return retract(options.param, estimates.at(state), xi.segment<3>(offset));
  };
  if (index == 0) {
    return prior_block(problem.prior, moved(0, 0), options).residual;
  }
  if (index <= n_prop) {
    const std::size_t i = index - 1;
    return propagation_block(problem.propagation[i], i, moved(i, 0), moved(i + 1, 3),
                             options)
        .residual;
  }
  const ObservationFactor& o = problem.observations[index - 1 - n_prop];
  if (o.state >= n) throw WindowMismatch("observation outside the window");
  if (options.param == Parametrization::Invariant) {
    // The innovation frame stays at the linearization point: R^T (y - x) - exp(xi) d.
    const Se2& est = estimates[o.state];
    return est.rotation_matrix().transpose() * (o.y - est.position()) -
           exp_translation_block(xi(0)) * xi.segment<2>(1);
  }
  return observation_block(o, moved(o.state, 0), options).residual;
}

double map_cost(const FactorGraphProblem& problem, const std::vector<Se2>& estimates,
                const SmootherOptions& options) {
  return build_linearization(problem, estimates, options).cost();
}

std::size_t SolveResult::iterations_to_plateau(double fraction) const {
  const double target = final_cost() + fraction * std::abs(final_cost());
  for (std::size_t k = 0; k < log.size(); ++k) {
    if (log[k].cost <= target) return log[k].iter;
  }
  return iterations();
}

SolveResult gn_solve(const FactorGraphProblem& problem,
                     const std::vector<Se2>& init, const SmootherOptions& options) {
  SolveResult res;
  res.estimates = init;
  double cost = map_cost(problem, res.estimates, options);
  res.log.push_back({0, cost, 0.0});
  for (std::size_t it = 1; it <= options.max_iters; ++it) {
    const LinearizedSystem sys = build_linearization(problem, res.estimates, options);
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    assemble(sys, &a, &b);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < a.cols()) {
      throw SingularNormalEquations("whitened Jacobian has rank " +
                                    std::to_string(qr.rank()) + " < " +
                                    std::to_string(a.cols()));
    }
    Eigen::VectorXd xi = -qr.solve(b);
    std::vector<Se2> next = apply_step(options.param, res.estimates, xi);
    double next_cost = map_cost(problem, next, options);
    if (options.line_search) {
      for (int halvings = 0; next_cost > cost && halvings < 30; ++halvings) {
        xi *= 0.5;
        next = apply_step(options.param, res.estimates, xi);
        next_cost = map_cost(problem, next, options);
      }
    }
    res.estimates = std::move(next);
    cost = next_cost;
    const double step = xi.norm();
    res.log.push_back({it, cost, step});
    if (step < options.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

void write_iteration_log_csv(std::ostream& os, const std::vector<IterationLog>& log) {
  CsvWriter csv(os);
  csv.header({"iter", "cost", "step_norm"});
  for (const auto& e : log) {
    csv.row() << static_cast<unsigned long>(e.iter) << e.cost << e.step_norm;
    csv.end_row();
  }
}

namespace {

// Window sub-problem over states [first, first + est.size()).
FactorGraphProblem window_problem(const FactorGraphProblem& full,
                                  const std::vector<std::vector<std::size_t>>& obs_by_state,
                                  const PriorFactor& prior, std::size_t first,
                                  std::size_t count) {
  FactorGraphProblem p;
  p.prior = prior;
  p.dt = full.dt;
  p.propagation.assign(full.propagation.begin() + static_cast<long>(first),
                       full.propagation.begin() + static_cast<long>(first + count - 1));
  for (std::size_t s = first; s < first + count; ++s) {
    for (std::size_t k : obs_by_state[s]) {
      ObservationFactor o = full.observations[k];
      o.state = s - first;
      p.observations.push_back(o);
    }
  }
  return p;
}

// Marginalizes state 0 of a two-state problem and returns the induced prior
// on state 1, anchored at its current estimate.
PriorFactor marginalize_oldest(const FactorGraphProblem& pair,
                               const std::vector<Se2>& est,
                               const SmootherOptions& options) {
  const LinearizedSystem sys = build_linearization(pair, est, options);
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  assemble(sys, &a, &b);
  const Eigen::MatrixXd h = a.transpose() * a;
  const Eigen::VectorXd g = a.transpose() * b;
  const Mat3 h11 = h.topLeftCorner<3, 3>();
  const Mat3 h12 = h.topRightCorner<3, 3>();
  const Mat3 h22 = h.bottomRightCorner<3, 3>();
  Eigen::FullPivLU<Mat3> lu11(h11);
  if (!lu11.isInvertible()) throw SingularNormalEquations("marginalized block is singular");
  const Mat3 lambda = h22 - h12.transpose() * lu11.solve(h12);
  const Vec3 eta = g.tail<3>() - h12.transpose() * lu11.solve(Vec3(g.head<3>()));
  Eigen::FullPivLU<Mat3> lu(lambda);
  if (!lu.isInvertible()) throw SingularNormalEquations("marginal information is singular");
  Mat3 cov = lu.inverse();
  cov = 0.5 * (cov + cov.transpose());
  const Vec3 delta = -lu.solve(eta);
  return PriorFactor{retract(options.param, est[1], delta), cov};
}

}  // namespace

WindowTrace sliding_window_run(const FactorGraphProblem& problem,
                               const WindowOptions& options) {
  if (options.window_size < 2) throw BadConfig("window_size must be at least 2");
  const std::size_t n = problem.num_states();
  std::vector<std::vector<std::size_t>> obs_by_state(n);
  for (std::size_t k = 0; k < problem.observations.size(); ++k) {
    const std::size_t s = problem.observations[k].state;
    if (s >= n) throw WindowMismatch("observation beyond the last state");
    obs_by_state[s].push_back(k);
  }

  SmootherOptions inner = options.smoother;
  inner.max_iters = options.gn_iters_per_step;

  WindowTrace trace;
  trace.records.reserve(n);
  trace.final_estimates.resize(n);
  PriorFactor prior = problem.prior;
  std::vector<Se2> window{problem.prior.mean};
  std::size_t first = 0;

  for (std::size_t s = 0; s < n; ++s) {
    try {
      if (s > 0) {
        window.push_back(window.back() * problem.propagation[s - 1].increment);
        if (window.size() > options.window_size) {
          // Only factors touching the removed state enter the marginal.
          FactorGraphProblem pair = window_problem(problem, obs_by_state, prior, first, 2);
          std::erase_if(pair.observations,
                        [](const ObservationFactor& o) { return o.state != 0; });
          prior = marginalize_oldest(pair, {window[0], window[1]}, inner);
          trace.final_estimates[first] = window.front();
          window.erase(window.begin());
          ++first;
        }
      }
      const FactorGraphProblem sub =
          window_problem(problem, obs_by_state, prior, first, window.size());
      SolveResult res = gn_solve(sub, window, inner);
      window = std::move(res.estimates);
      trace.records.push_back({s, window.back(), res.iterations()});
    } catch (const StepError&) {
      throw;
    } catch (const Error& e) {
      throw StepError(s, static_cast<double>(s) * problem.dt, e.what());
    }
  }
  for (std::size_t k = 0; k < window.size(); ++k) {
    trace.final_estimates[first + k] = window[k];
  }
  return trace;
}

}  // namespace invnav
