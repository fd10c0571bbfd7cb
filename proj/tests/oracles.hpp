#pragma once

// Reference computations that share no code with the library: a truncated
// Taylor matrix exponential with scaling and squaring, central finite
// differences, and a plain RK4 integrator for the unicycle.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace oracle {

inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd scaled = a / std::pow(2.0, squarings);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

inline Eigen::Matrix3d wedge(double theta, double x1, double x2) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(0, 1) = -theta;
  m(1, 0) = theta;
  m(0, 2) = x1;
  m(1, 2) = x2;
  return m;
}

inline Eigen::Matrix3d homogeneous(double theta, double x1, double x2) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 0) = std::cos(theta);
  m(0, 1) = -std::sin(theta);
  m(1, 0) = std::sin(theta);
  m(1, 1) = std::cos(theta);
  m(0, 2) = x1;
  m(1, 2) = x2;
  return m;
}

using VecFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline Eigen::MatrixXd central_difference(const VecFn& f, int n, double h = 1e-6) {
  const Eigen::VectorXd f0 = f(Eigen::VectorXd::Zero(n));
  Eigen::MatrixXd jac(f0.size(), n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(j) = h;
    jac.col(j) = (f(e) - f(-e)) / (2.0 * h);
  }
  return jac;
}

struct UnicycleState {
  double theta = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
};

// RK4 on dtheta = omega(t), dx = u(t) (cos theta, sin theta).
inline UnicycleState integrate_unicycle(UnicycleState s,
                                        const std::function<double(double)>& omega,
                                        const std::function<double(double)>& u,
                                        double t0, double t1, int substeps) {
  const double h = (t1 - t0) / substeps;
  auto rhs = [&](double t, const UnicycleState& q) {
    return UnicycleState{omega(t), u(t) * std::cos(q.theta), u(t) * std::sin(q.theta)};
  };
  auto axpy = [](const UnicycleState& q, double a, const UnicycleState& d) {
    return UnicycleState{q.theta + a * d.theta, q.x1 + a * d.x1, q.x2 + a * d.x2};
  };
  double t = t0;
  for (int i = 0; i < substeps; ++i) {
    const UnicycleState k1 = rhs(t, s);
    const UnicycleState k2 = rhs(t + 0.5 * h, axpy(s, 0.5 * h, k1));
    const UnicycleState k3 = rhs(t + 0.5 * h, axpy(s, 0.5 * h, k2));
    const UnicycleState k4 = rhs(t + h, axpy(s, h, k3));
    s.theta += h / 6.0 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta);
    s.x1 += h / 6.0 * (k1.x1 + 2 * k2.x1 + 2 * k3.x1 + k4.x1);
    s.x2 += h / 6.0 * (k1.x2 + 2 * k2.x2 + 2 * k3.x2 + k4.x2);
    t += h;
  }
  return s;
}

}  // namespace oracle
