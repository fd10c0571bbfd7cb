#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invnav/se2.hpp"
#include "invnav/vehicle_sim.hpp"

namespace invnav {

/// Error parametrization used to linearize the MAP problem.
///
/// All four share the MAP model chi_{i+1} = chi_i U_i exp(w_i),
/// y_k = x_{t_k} + v_k, and differ in how residuals, Jacobians and updates
/// are written (tangent vectors are heading first):
///
///  Invariant  chi <- chi exp(xi)
///             prior  log(prior^-1 chi_0)            J = Jr^-1(prior residual)
///             prop.  log(U^-1 chi_i^-1 chi_j)       J_i = -Ad(U^-1), J_j = I
///             obs.   R^T (y - x) - exp(xi) d        J = [0 | -I], cov R^T N R
///  Linear     (theta, x) <- (theta, x) + xi
///             prop.  (th_j - th_i - w, x_j - x_i - R(th_i) u)
///             obs.   x - y
///  Grisetti   additive update, wrapped angles
///             prop.  (wrap(th_j - th_i - w), R(w)^T (R(th_i)^T (x_j - x_i) - u))
///             obs.   x - y
///  Forster    theta <- theta + xi_0, x <- x + R(theta) xi_p
///             prior  (wrap(th - th_bar), R(th_bar)^T (x - x_bar))
///             prop.  (wrap(th_j - th_i - w), R(th_i)^T (x_j - x_i) - u)
///             obs.   x - y                            J = [0 | R(theta)]
///
/// where (w, u) are the heading and translation of U_i.
enum class Parametrization { Invariant, Linear, Grisetti, Forster };

const char* to_string(Parametrization p);
Parametrization parametrization_from_string(const std::string& name);

struct PriorFactor {
  Se2 mean;
  Mat3 cov = Mat3::Identity();
};

/// chi_{i+1} = chi_i U_i exp(w_i), w_i ~ N(0, cov).
struct PropagationFactor {
  Se2 increment;
  Mat3 cov = Mat3::Identity();
};

struct ObservationFactor {
  std::size_t state = 0;
  Vec2 y = Vec2::Zero();
  Mat2 cov = Mat2::Identity();
};

struct FactorGraphProblem {
  PriorFactor prior;
  std::vector<PropagationFactor> propagation;  // factor i links states i, i+1
  std::vector<ObservationFactor> observations;
  double dt = 0.0;  // state spacing, only used in error messages

  std::size_t num_states() const { return propagation.size() + 1; }

  /// Chains the increments from the prior mean.
  std::vector<Se2> dead_reckoning() const;
};

/// Increment noise covariance of one simulation step, heading first:
/// diag(q_w, q_x, q_x) dt^2.
Mat3 odometry_step_covariance(const ScenarioConfig& config);

/// Builds a problem from a simulated trajectory: nominal increments, every
/// measurement, and the given prior and per-step noise covariance.
FactorGraphProblem make_problem(const Trajectory& traj, const PriorFactor& prior,
                                const Mat3& step_cov);

struct SmootherOptions {
  Parametrization param = Parametrization::Invariant;
  /// Replace the prior Jacobian by the identity (invariant only).
  bool prior_jacobian_identity = false;
  /// Use the exact derivative of the invariant propagation residual instead of
  /// the estimate-independent first-order one.
  bool exact_propagation_jacobian = false;
  /// Halve the step while the cost increases. Off: plain Gauss-Newton.
  bool line_search = false;
  std::size_t max_iters = 50;
  double tol = 1e-10;
};

/// One factor linearized as r(xi) ~ residual + jacobian * xi over the
/// tangent coordinates of `states`, with noise covariance `cov`.
struct FactorBlock {
  std::vector<std::size_t> states;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;  // residual.size() x 3 * states.size()
  Eigen::MatrixXd cov;
};

struct LinearizedSystem {
  std::size_t num_states = 0;
  std::vector<FactorBlock> factors;  // prior first, then propagation, then observations

  std::size_t num_rows() const;
  /// Whitened stacked Jacobian (rows x 3 num_states) and residual.
  Eigen::MatrixXd whitened_jacobian() const;
  Eigen::VectorXd whitened_residual() const;
  /// J^T Sigma^-1 J.
  Eigen::MatrixXd information() const;
  /// Sum of squared whitened residuals.
  double cost() const;
};

/// Applies the parametrization's update rule.
Se2 retract(Parametrization param, const Se2& estimate, const Vec3& xi);

/// Throws WindowMismatch if estimates.size() != problem.num_states() or an
/// observation points outside the window.
LinearizedSystem build_linearization(const FactorGraphProblem& problem,
                                     const std::vector<Se2>& estimates,
                                     const SmootherOptions& options);

/// Residual of factor `index` (ordering of build_linearization) under the
/// parametrization's own definition, as a function of a perturbation `xi` of
/// the states it touches (3 or 6 entries). Its derivative at xi = 0 is the
/// factor's Jacobian; for invariant propagation factors this holds with
/// exact_propagation_jacobian, or wherever the residual vanishes.
Eigen::VectorXd factor_residual(const FactorGraphProblem& problem,
                                const std::vector<Se2>& estimates,
                                const SmootherOptions& options, std::size_t index,
                                const Eigen::VectorXd& xi);

/// MAP cost of the estimates in the parametrization's own residuals.
double map_cost(const FactorGraphProblem& problem, const std::vector<Se2>& estimates,
                const SmootherOptions& options);

struct IterationLog {
  std::size_t iter = 0;
  double cost = 0.0;
  double step_norm = 0.0;
};

struct SolveResult {
  std::vector<Se2> estimates;
  std::vector<IterationLog> log;  // entry 0 is the initial cost
  bool converged = false;

  std::size_t iterations() const { return log.empty() ? 0 : log.size() - 1; }
  double final_cost() const { return log.empty() ? 0.0 : log.back().cost; }
  /// First iteration whose cost is within `fraction` of the final cost.
  std::size_t iterations_to_plateau(double fraction = 0.01) const;
};

/// Gauss-Newton iterations with a dense QR solve of the whitened system.
/// Throws SingularNormalEquations on a rank deficient system.
SolveResult gn_solve(const FactorGraphProblem& problem,
                     const std::vector<Se2>& init, const SmootherOptions& options);

/// iter,cost,step_norm
void write_iteration_log_csv(std::ostream& os, const std::vector<IterationLog>& log);

struct WindowOptions {
  SmootherOptions smoother;
  std::size_t window_size = 5;
  std::size_t gn_iters_per_step = 1;
};

struct WindowRecord {
  std::size_t state = 0;  // index of the newest state
  Se2 head;               // its estimate after the step's iterations
  std::size_t iterations = 0;
};

struct WindowTrace {
  std::vector<WindowRecord> records;
  /// Estimate of each state when it left the window (or at the end).
  std::vector<Se2> final_estimates;
};

/// Fixed-lag smoother: states arrive one at a time, the oldest one is
/// marginalized (Schur complement at its current estimate) once the window is
/// full, and at most gn_iters_per_step iterations run per arrival.
/// Throws BadConfig if window_size < 2; inner errors come back as StepError.
WindowTrace sliding_window_run(const FactorGraphProblem& problem,
                               const WindowOptions& options);

}  // namespace invnav
