#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "invnav/se2.hpp"
#include "invnav/vehicle_sim.hpp"

namespace invnav {

using Gain = Eigen::Matrix<double, 3, 2>;

/// How the covariance of a StateEstimate is to be read.
enum class ErrorConvention {
  Linear,         // (theta_hat - theta, x_hat - x)
  LeftInvariant,  // log(mean^-1 * truth)
};

struct StateEstimate {
  Se2 mean;
  Mat3 cov = Mat3::Zero();
  ErrorConvention convention = ErrorConvention::Linear;
};

/// Discretization of dP/dt = A P + P A^T (+ Q) between two samples.
enum class RiccatiScheme {
  Exact,  // P <- Phi P Phi^T with the exact transition of piecewise constant inputs
  Rk4,
};

enum class CovarianceUpdate { Standard, Joseph };

enum class MeanIntegrator { Exact, Euler };

/// Placement of omega in the invariant system matrix. `Propagation` puts +omega
/// at (1,2) and -omega at (2,1) (0-based, heading first); `Transposed` swaps the
/// signs. Only `Propagation` is the linearization of the invariant error; the
/// other one is kept to demonstrate that it breaks manifold preservation.
enum class OmegaCoupling { Propagation, Transposed };

struct FilterOptions {
  RiccatiScheme riccati = RiccatiScheme::Exact;
  CovarianceUpdate cov_update = CovarianceUpdate::Standard;
  MeanIntegrator mean_integrator = MeanIntegrator::Exact;
  OmegaCoupling omega_coupling = OmegaCoupling::Propagation;
  /// Continuous-time process noise density, added as Q dt per propagation.
  /// Zero by default: the odometry is treated as perfect.
  Mat3 process_noise = Mat3::Zero();
};

/// dP/dt matrix of the EKF: only column 0 is non-zero,
/// u (0, -sin(heading), cos(heading)).
Mat3 ekf_system_matrix(double heading, double u);

/// dP/dt matrix of the left-invariant EKF. Independent of the estimate.
Mat3 iekf_system_matrix(double omega, double u,
                        OmegaCoupling coupling = OmegaCoupling::Propagation);

/// Initial covariance with dispersion on the heading only.
Mat3 heading_only_covariance(double heading_variance);

StateEstimate ekf_propagate(const StateEstimate& est, double omega, double u,
                            double dt, const FilterOptions& options = {});
StateEstimate iekf_propagate(const StateEstimate& est, double omega, double u,
                             double dt, const FilterOptions& options = {});

struct UpdateResult {
  StateEstimate estimate;
  Vec2 innovation = Vec2::Zero();
  Gain gain = Gain::Zero();
};

/// z = y - x_hat, additive correction (theta, x) += K z.
UpdateResult ekf_update(const StateEstimate& est, const Vec2& y, const Mat2& n,
                        const FilterOptions& options = {});
/// z = R(theta_hat)^T (y - x_hat), mean <- mean * exp(K z).
UpdateResult iekf_update(const StateEstimate& est, const Vec2& y, const Mat2& n,
                         const FilterOptions& options = {});

/// ||R(theta_hat)^T x_hat - b||: distance of an estimate to the manifold on
/// which perfect odometry confines the state.
double manifold_residual(const Se2& mean, const Vec2& b);

enum class FilterKind { Ekf, Iekf };

const char* to_string(FilterKind kind);

/// Propagate/update state machine around one of the two filters.
class Filter {
 public:
  Filter(FilterKind kind, const StateEstimate& initial,
         const FilterOptions& options = {});

  FilterKind kind() const { return kind_; }
  const StateEstimate& estimate() const { return est_; }
  const FilterOptions& options() const { return options_; }

  void propagate(double omega, double u, double dt);
  UpdateResult update(const Vec2& y, const Mat2& n);

 private:
  FilterKind kind_;
  StateEstimate est_;
  FilterOptions options_;
};

struct TraceRecord {
  std::size_t step = 0;
  double time = 0.0;
  Se2 mean;
  Mat3 cov = Mat3::Zero();
  bool updated = false;
  Vec2 innovation = Vec2::Zero();
  Gain gain = Gain::Zero();
  double err_theta_prior = 0.0;  // before the update at this step
  double err_theta = 0.0;        // theta_hat - theta, unwrapped
  double err_pos = 0.0;          // ||x_hat - x||
  double manifold_resid = 0.0;
};

struct EstimateTrace {
  FilterKind kind = FilterKind::Iekf;
  std::vector<TraceRecord> records;
  /// Largest manifold residual over every step, recorded or not.
  double max_manifold_resid = 0.0;
};

struct RunConfig {
  FilterOptions options;
  Mat3 initial_cov = heading_only_covariance(1.5707963267948966);
  Vec2 initial_position = Vec2::Zero();
  /// Keep every stride-th step (plus the last one). Updates are kept only if
  /// they fall on the stride.
  std::size_t record_stride = 1;
};

/// Runs a filter over a simulated trajectory starting from heading
/// `theta0_hat`. Errors are rethrown as StepError.
EstimateTrace run_filter(FilterKind kind, const Trajectory& traj,
                         double theta0_hat, const RunConfig& config = {});

/// t,theta_hat,x1_hat,x2_hat,err_theta,err_pos,manifold_resid,P11,P12,P13,P22,P23,P33,gain_norm
void write_trace_csv(std::ostream& os, const EstimateTrace& trace);

}  // namespace invnav
