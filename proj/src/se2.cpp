#include "invnav/se2.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <sstream>

#include "invnav/errors.hpp"

namespace invnav {

namespace {

constexpr double kPi = std::numbers::pi;

// sin(t)/t, (1-cos(t))/t, (t-sin(t))/t^2, (1-cos(t))/t^2
struct TrigCoefficients {
  double a;
  double b;
  double c;
  double d;
};

TrigCoefficients trig_coefficients(double t) {
  const double t2 = t * t;
  if (std::abs(t) < kSmallAngle) {
    return {1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            t / 2.0 - t * t2 / 24.0 + t * t2 * t2 / 720.0,
            t / 6.0 - t * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0};
  }
  const double s = std::sin(t);
  const double sh = std::sin(0.5 * t);
  const double one_minus_cos = 2.0 * sh * sh;
  // t - sin(t) cancels for small t; its series converges fast below 0.1.
  const double t_minus_sin_over_t2 =
      std::abs(t) < 0.1
          ? t * (1.0 / 6.0 - t2 * (1.0 / 120.0 - t2 * (1.0 / 5040.0 - t2 / 362880.0)))
          : (t - s) / t2;
  return {s / t, one_minus_cos / t, t_minus_sin_over_t2, one_minus_cos / t2};
}

// Inverse of [[1, 0], [v, M]].
Mat3 unit_block_inverse(const Mat3& m) {
  const Mat2 block_inv = m.bottomRightCorner<2, 2>().inverse();
  Mat3 out = Mat3::Zero();
  out(0, 0) = 1.0;
  out.bottomRightCorner<2, 2>() = block_inv;
  out.bottomLeftCorner<2, 1>() = -block_inv * m.bottomLeftCorner<2, 1>();
  return out;
}

}  // namespace

double wrap_angle(double theta) {
  double w = std::remainder(theta, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

Mat2 rotation_matrix(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

Mat2 rotation_generator() {
  Mat2 j;
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

Se2 Se2::from_matrix(const Mat3& m) {
  return Se2(std::atan2(m(1, 0), m(0, 0)), m.topRightCorner<2, 1>());
}

Mat3 Se2::matrix() const {
  Mat3 m = Mat3::Identity();
  m.topLeftCorner<2, 2>() = rot_.matrix();
  m.topRightCorner<2, 1>() = pos_;
  return m;
}

Se2 Se2::operator*(const Se2& other) const {
  return Se2(rot_ * other.rot_, pos_ + rot_ * other.pos_);
}

Se2 Se2::inverse() const {
  const Rotation2 inv = rot_.inverse();
  return Se2(inv, -(inv * pos_));
}

Vec2 Se2::act(const Vec2& p) const { return rot_ * p + pos_; }

Mat2 exp_translation_block(double theta) {
  const TrigCoefficients k = trig_coefficients(theta);
  Mat2 b;
  b << k.a, -k.b, k.b, k.a;
  return b;
}

Mat3 hat(const Tangent3& xi) {
  Mat3 m = Mat3::Zero();
  m.topLeftCorner<2, 2>() = xi(0) * rotation_generator();
  m.topRightCorner<2, 1>() = xi.tail<2>();
  return m;
}

Se2 exp(const Tangent3& xi) {
  return Se2(xi(0), exp_translation_block(xi(0)) * xi.tail<2>());
}

Tangent3 log(const Se2& g, double tolerance) {
  const double theta = g.canonical_heading();
  if (std::abs(std::abs(theta) - kPi) < tolerance) {
    std::ostringstream msg;
    msg << "log: heading " << theta << " is antipodal (tolerance "
        << tolerance << ")";
    throw AntipodalHeading(msg.str());
  }
  // B(theta)^-1 = (theta/2) cot(theta/2) I - (theta/2) J
  const double half = 0.5 * theta;
  const double diag = std::abs(theta) < kSmallAngle
                          ? 1.0 - theta * theta / 12.0
                          : half / std::tan(half);
  Mat2 b_inv;
  b_inv << diag, half, -half, diag;
  Tangent3 xi;
  xi(0) = theta;
  xi.tail<2>() = b_inv * g.position();
  return xi;
}

Mat3 adjoint(const Se2& g) {
  Mat3 ad = Mat3::Zero();
  ad(0, 0) = 1.0;
  ad.bottomLeftCorner<2, 1>() = -rotation_generator() * g.position();
  ad.bottomRightCorner<2, 2>() = g.rotation_matrix();
  return ad;
}

Mat3 right_jacobian(const Tangent3& xi) {
  const TrigCoefficients k = trig_coefficients(xi(0));
  const double r1 = xi(1);
  const double r2 = xi(2);
  Mat3 j;
  j << 1.0, 0.0, 0.0,
       k.c * r1 - k.d * r2, k.a, k.b,
       k.d * r1 + k.c * r2, -k.b, k.a;
  return j;
}

Mat3 left_jacobian(const Tangent3& xi) {
  const TrigCoefficients k = trig_coefficients(xi(0));
  const double r1 = xi(1);
  const double r2 = xi(2);
  Mat3 j;
  j << 1.0, 0.0, 0.0,
       k.c * r1 + k.d * r2, k.a, -k.b,
       -k.d * r1 + k.c * r2, k.b, k.a;
  return j;
}

Mat3 right_jacobian_inverse(const Tangent3& xi) {
  return unit_block_inverse(right_jacobian(xi));
}

Mat3 left_jacobian_inverse(const Tangent3& xi) {
  return unit_block_inverse(left_jacobian(xi));
}

}  // namespace invnav
