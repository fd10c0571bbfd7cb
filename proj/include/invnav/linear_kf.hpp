#pragma once

#include <Eigen/Core>

namespace invnav {

/// Kalman filter for a deterministic linear system dx/dt = A x, together with
/// the linear constraint C_t x = alpha that the dynamics transport
/// (dC/dt = -C A).
struct LinearKfState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd constraint;  // C_t, p x n
  Eigen::VectorXd alpha;       // p
};

/// Propagates over dt with A held constant: mean and covariance through
/// exp(A dt), the constraint through exp(-A dt). No process noise.
LinearKfState linear_kf_propagate(const LinearKfState& state,
                                  const Eigen::MatrixXd& a, double dt);

/// Standard update with P+ = (I - K H) P. Throws SingularInnovation.
LinearKfState linear_kf_update(const LinearKfState& state,
                               const Eigen::MatrixXd& h,
                               const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& n);

LinearKfState linear_kf_step(const LinearKfState& state,
                             const Eigen::MatrixXd& a, double dt,
                             const Eigen::MatrixXd& h, const Eigen::VectorXd& y,
                             const Eigen::MatrixXd& n);

/// ||C_t x_hat - alpha||
double constraint_violation(const LinearKfState& state);
/// ||C_t P C_t^T||, the dispersion the filter assigns across the constraint.
double constraint_dispersion(const LinearKfState& state);

}  // namespace invnav
