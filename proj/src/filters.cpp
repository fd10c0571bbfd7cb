#include "invnav/filters.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <ostream>

#include "invnav/csv.hpp"
#include "invnav/errors.hpp"

namespace invnav {

namespace {

constexpr double kEigenFloor = -1e-10;

void require(const StateEstimate& est, ErrorConvention expected, const char* op) {
  if (est.convention != expected) {
    throw BadConfig(std::string(op) + ": wrong error convention for this filter");
  }
}

// Symmetrize; if the spectrum went below kEigenFloor, clamp negative
// eigenvalues to zero.
Mat3 condition_covariance(const Mat3& p) {
  Mat3 sym = 0.5 * (p + p.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> eig;
  eig.compute(sym);
  if (eig.eigenvalues().minCoeff() < kEigenFloor) {
    sym = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
          eig.eigenvectors().transpose();
    sym = 0.5 * (sym + sym.transpose());
  }
  return sym;
}

template <typename SystemMatrix>
Mat3 rk4_riccati(const Mat3& p, const Mat3& q, double dt, SystemMatrix&& a_at) {
  auto f = [&](double tau, const Mat3& pp) -> Mat3 {
    const Mat3 a = a_at(tau);
    return a * pp + pp * a.transpose() + q;
  };
  const Mat3 k1 = f(0.0, p);
  const Mat3 k2 = f(0.5 * dt, p + 0.5 * dt * k1);
  const Mat3 k3 = f(0.5 * dt, p + 0.5 * dt * k2);
  const Mat3 k4 = f(dt, p + dt * k3);
  return p + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Se2 propagate_mean(const Se2& mean, double omega, double u, double dt,
                   MeanIntegrator integrator) {
  if (integrator == MeanIntegrator::Exact) {
    return mean * exp(Tangent3(omega * dt, u * dt, 0.0));
  }
  return Se2(mean.heading() + omega * dt,
             mean.position() + mean.rotation() * Vec2(u * dt, 0.0));
}

struct GainTerms {
  Gain k;
  Mat3 cov;
};

GainTerms kalman_gain(const Mat3& p, const Mat2& n, CovarianceUpdate form) {
  const Mat2 s = p.bottomRightCorner<2, 2>() + n;
  Eigen::FullPivLU<Mat2> lu(s);
  if (!lu.isInvertible()) {
    throw SingularInnovation("H P H^T + N is singular");
  }
  GainTerms out;
  out.k = p.rightCols<2>() * lu.inverse();
  Eigen::Matrix<double, 2, 3> h = Eigen::Matrix<double, 2, 3>::Zero();
  h(0, 1) = 1.0;
  h(1, 2) = 1.0;
  const Mat3 i_kh = Mat3::Identity() - out.k * h;
  if (form == CovarianceUpdate::Joseph) {
    out.cov = i_kh * p * i_kh.transpose() + out.k * n * out.k.transpose();
  } else {
    out.cov = i_kh * p;
  }
  out.cov = condition_covariance(out.cov);
  return out;
}

}  // namespace

Mat3 ekf_system_matrix(double heading, double u) {
  Mat3 a = Mat3::Zero();
  a(1, 0) = -std::sin(heading) * u;
  a(2, 0) = std::cos(heading) * u;
  return a;
}

Mat3 iekf_system_matrix(double omega, double u, OmegaCoupling coupling) {
  const double sign = coupling == OmegaCoupling::Propagation ? 1.0 : -1.0;
  Mat3 a = Mat3::Zero();
  a(1, 2) = sign * omega;
  a(2, 1) = -sign * omega;
  a(2, 0) = u;
  return a;
}

Mat3 heading_only_covariance(double heading_variance) {
  Mat3 p = Mat3::Zero();
  p(0, 0) = heading_variance;
  return p;
}

StateEstimate ekf_propagate(const StateEstimate& est, double omega, double u,
                            double dt, const FilterOptions& options) {
  require(est, ErrorConvention::Linear, "ekf_propagate");
  StateEstimate out = est;
  out.mean = propagate_mean(est.mean, omega, u, dt, options.mean_integrator);
  if (options.riccati == RiccatiScheme::Exact) {
    // A(t) A(s) = 0 for every t, s, so the transition is I + int A, whose
    // heading column is J (x_hat(t+dt) - x_hat(t)).
    Mat3 phi = Mat3::Identity();
    phi.bottomLeftCorner<2, 1>() =
        rotation_generator() * (out.mean.position() - est.mean.position());
    out.cov = phi * est.cov * phi.transpose() + options.process_noise * dt;
  } else {
    const double heading = est.mean.heading();
    out.cov = rk4_riccati(est.cov, options.process_noise, dt, [&](double tau) {
      return ekf_system_matrix(heading + omega * tau, u);
    });
  }
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

StateEstimate iekf_propagate(const StateEstimate& est, double omega, double u,
                             double dt, const FilterOptions& options) {
  require(est, ErrorConvention::LeftInvariant, "iekf_propagate");
  StateEstimate out = est;
  out.mean = propagate_mean(est.mean, omega, u, dt, options.mean_integrator);
  if (options.riccati == RiccatiScheme::Exact) {
    Mat3 phi;
    if (options.omega_coupling == OmegaCoupling::Propagation) {
      // exp(A dt) = Ad(exp((omega dt, u dt, 0))^-1)
      phi = adjoint(exp(Tangent3(omega * dt, u * dt, 0.0)).inverse());
    } else {
      phi = (iekf_system_matrix(omega, u, options.omega_coupling) * dt).exp();
    }
    out.cov = phi * est.cov * phi.transpose() + options.process_noise * dt;
  } else {
    const Mat3 a = iekf_system_matrix(omega, u, options.omega_coupling);
    out.cov = rk4_riccati(est.cov, options.process_noise, dt,
                          [&](double) { return a; });
  }
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

UpdateResult ekf_update(const StateEstimate& est, const Vec2& y, const Mat2& n,
                        const FilterOptions& options) {
  require(est, ErrorConvention::Linear, "ekf_update");
  const GainTerms g = kalman_gain(est.cov, n, options.cov_update);
  UpdateResult r;
  r.innovation = y - est.mean.position();
  r.gain = g.k;
  const Vec3 dx = g.k * r.innovation;
  r.estimate.mean = Se2(est.mean.heading() + dx(0), est.mean.position() + dx.tail<2>());
  r.estimate.cov = g.cov;
  r.estimate.convention = est.convention;
  return r;
}

UpdateResult iekf_update(const StateEstimate& est, const Vec2& y, const Mat2& n,
                         const FilterOptions& options) {
  require(est, ErrorConvention::LeftInvariant, "iekf_update");
  // The body-frame innovation carries noise R^T v.
  const Mat2 rot = est.mean.rotation_matrix();
  const GainTerms g = kalman_gain(est.cov, rot.transpose() * n * rot, options.cov_update);
  UpdateResult r;
  r.innovation = est.mean.rotation().inverse() * (y - est.mean.position());
  r.gain = g.k;
  r.estimate.mean = est.mean * exp(g.k * r.innovation);
  r.estimate.cov = g.cov;
  r.estimate.convention = est.convention;
  return r;
}

double manifold_residual(const Se2& mean, const Vec2& b) {
  return (mean.rotation().inverse() * mean.position() - b).norm();
}

const char* to_string(FilterKind kind) {
  return kind == FilterKind::Ekf ? "ekf" : "iekf";
}

Filter::Filter(FilterKind kind, const StateEstimate& initial,
               const FilterOptions& options)
    : kind_(kind), est_(initial), options_(options) {
  const ErrorConvention expected = kind == FilterKind::Ekf
                                       ? ErrorConvention::Linear
                                       : ErrorConvention::LeftInvariant;
  require(est_, expected, "Filter");
}

void Filter::propagate(double omega, double u, double dt) {
  est_ = kind_ == FilterKind::Ekf ? ekf_propagate(est_, omega, u, dt, options_)
                                  : iekf_propagate(est_, omega, u, dt, options_);
}

UpdateResult Filter::update(const Vec2& y, const Mat2& n) {
  UpdateResult r = kind_ == FilterKind::Ekf ? ekf_update(est_, y, n, options_)
                                            : iekf_update(est_, y, n, options_);
  est_ = r.estimate;
  return r;
}

EstimateTrace run_filter(FilterKind kind, const Trajectory& traj,
                         double theta0_hat, const RunConfig& config) {
  StateEstimate init;
  init.mean = Se2(theta0_hat, config.initial_position);
  init.cov = config.initial_cov;
  init.convention = kind == FilterKind::Ekf ? ErrorConvention::Linear
                                            : ErrorConvention::LeftInvariant;
  Filter filter(kind, init, config.options);

  EstimateTrace trace;
  trace.kind = kind;
  const std::size_t stride = std::max<std::size_t>(1, config.record_stride);
  trace.records.reserve(traj.states.size() / stride + 2);
  const auto meas = traj.measurement_index();

  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const CarState& truth = traj.states[k];
    TraceRecord rec;
    try {
      if (k > 0) {
        const OdometryInput& in = traj.inputs[k - 1];
        filter.propagate(in.omega, in.u, traj.dt);
      }
      rec.err_theta_prior = filter.estimate().mean.heading() - truth.heading;
      if (meas[k] >= 0) {
        const GpsMeasurement& m = traj.measurements[static_cast<std::size_t>(meas[k])];
        const UpdateResult r = filter.update(m.y, m.cov);
        rec.updated = true;
        rec.innovation = r.innovation;
        rec.gain = r.gain;
      }
    } catch (const Error& e) {
      throw StepError(k, truth.time, e.what());
    }
    const StateEstimate& est = filter.estimate();
    rec.manifold_resid = manifold_residual(est.mean, traj.reference[k]);
    trace.max_manifold_resid = std::max(trace.max_manifold_resid, rec.manifold_resid);
    if (k % stride == 0 || k + 1 == traj.states.size()) {
      rec.step = k;
      rec.time = truth.time;
      rec.mean = est.mean;
      rec.cov = est.cov;
      rec.err_theta = est.mean.heading() - truth.heading;
      rec.err_pos = (est.mean.position() - truth.position).norm();
      trace.records.push_back(rec);
    }
  }
  return trace;
}

void write_trace_csv(std::ostream& os, const EstimateTrace& trace) {
  CsvWriter csv(os);
  csv.header({"t", "theta_hat", "x1_hat", "x2_hat", "err_theta", "err_pos",
              "manifold_resid", "P11", "P12", "P13", "P22", "P23", "P33",
              "gain_norm"});
  for (const auto& r : trace.records) {
    csv.row() << r.time << r.mean.heading() << r.mean.position()(0)
              << r.mean.position()(1) << r.err_theta << r.err_pos
              << r.manifold_resid << r.cov(0, 0) << r.cov(0, 1) << r.cov(0, 2)
              << r.cov(1, 1) << r.cov(1, 2) << r.cov(2, 2)
              << (r.updated ? r.gain.norm() : 0.0);
    csv.end_row();
  }
}

}  // namespace invnav
