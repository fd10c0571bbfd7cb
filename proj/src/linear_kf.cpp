#include "invnav/linear_kf.hpp"

#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include "invnav/errors.hpp"

namespace invnav {

LinearKfState linear_kf_propagate(const LinearKfState& state,
                                  const Eigen::MatrixXd& a, double dt) {
  if (a.rows() != state.mean.size() || a.cols() != state.mean.size()) {
    throw BadConfig("linear_kf_propagate: A has the wrong shape");
  }
  const Eigen::MatrixXd phi = (a * dt).exp();
  const Eigen::MatrixXd phi_inv = (-a * dt).exp();
  LinearKfState out = state;
  out.mean = phi * state.mean;
  out.cov = phi * state.cov * phi.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  out.constraint = state.constraint * phi_inv;
  return out;
}

LinearKfState linear_kf_update(const LinearKfState& state,
                               const Eigen::MatrixXd& h,
                               const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& n) {
  if (h.cols() != state.mean.size() || h.rows() != y.size() ||
      n.rows() != y.size() || n.cols() != y.size()) {
    throw BadConfig("linear_kf_update: inconsistent dimensions");
  }
  const Eigen::MatrixXd s = h * state.cov * h.transpose() + n;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
  if (!lu.isInvertible()) throw SingularInnovation("H P H^T + N is singular");
  const Eigen::MatrixXd k = state.cov * h.transpose() * lu.inverse();
  LinearKfState out = state;
  out.mean = state.mean + k * (y - h * state.mean);
  const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(state.mean.size(), state.mean.size());
  out.cov = (i - k * h) * state.cov;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

LinearKfState linear_kf_step(const LinearKfState& state,
                             const Eigen::MatrixXd& a, double dt,
                             const Eigen::MatrixXd& h, const Eigen::VectorXd& y,
                             const Eigen::MatrixXd& n) {
  return linear_kf_update(linear_kf_propagate(state, a, dt), h, y, n);
}

double constraint_violation(const LinearKfState& state) {
  return (state.constraint * state.mean - state.alpha).norm();
}

double constraint_dispersion(const LinearKfState& state) {
  return (state.constraint * state.cov * state.constraint.transpose()).norm();
}

}  // namespace invnav
