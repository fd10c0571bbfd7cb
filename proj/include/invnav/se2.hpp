#pragma once

#include <Eigen/Core>

namespace invnav {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Tangent coordinates of SE(2), ordered (angle, x1, x2).
///
/// Every matrix in the library that acts on tangent vectors (covariances,
/// Jacobians, adjoints, gains) uses this ordering: index 0 is the heading.
using Tangent3 = Eigen::Vector3d;

/// Below this |theta| the B(theta) block and the Jacobians switch to their
/// Taylor expansions.
inline constexpr double kSmallAngle = 1e-4;

/// Default distance to +-pi under which log() refuses to pick a sign.
inline constexpr double kAntipodalTolerance = 1e-9;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double theta);

/// 2x2 rotation by `theta`.
Mat2 rotation_matrix(double theta);

/// The 90 degree rotation generator [[0,-1],[1,0]]. Commutes with every
/// rotation.
Mat2 rotation_generator();

/// Planar rotation. The angle is stored unwrapped; canonical() is the
/// representative in (-pi, pi] used for reporting.
class Rotation2 {
 public:
  Rotation2() = default;
  explicit Rotation2(double theta) : theta_(theta) {}

  double angle() const { return theta_; }
  double canonical() const { return wrap_angle(theta_); }
  Mat2 matrix() const { return rotation_matrix(theta_); }

  Rotation2 operator*(const Rotation2& other) const {
    return Rotation2(theta_ + other.theta_);
  }
  Rotation2 inverse() const { return Rotation2(-theta_); }
  Vec2 operator*(const Vec2& p) const { return matrix() * p; }

 private:
  double theta_ = 0.0;
};

/// Element of SE(2): homogeneous matrix [[R(theta), x], [0, 1]].
class Se2 {
 public:
  Se2() : pos_(Vec2::Zero()) {}
  Se2(double theta, const Vec2& position) : rot_(theta), pos_(position) {}
  Se2(const Rotation2& rot, const Vec2& position) : rot_(rot), pos_(position) {}

  static Se2 identity() { return Se2(); }

  /// Builds an element from a homogeneous matrix. The heading is read with
  /// atan2 and therefore lands in (-pi, pi].
  static Se2 from_matrix(const Mat3& m);

  double heading() const { return rot_.angle(); }
  double canonical_heading() const { return rot_.canonical(); }
  const Rotation2& rotation() const { return rot_; }
  Mat2 rotation_matrix() const { return rot_.matrix(); }
  const Vec2& position() const { return pos_; }

  Mat3 matrix() const;

  Se2 operator*(const Se2& other) const;
  Se2 inverse() const;

  /// R(theta) p + x.
  Vec2 act(const Vec2& p) const;

 private:
  Rotation2 rot_;
  Vec2 pos_;
};

/// B(theta) = (sin(theta) I + (1 - cos(theta)) J) / theta, the translation
/// block of the exponential. Continuous at 0 where it equals the identity.
Mat2 exp_translation_block(double theta);

/// Lie algebra element as a 3x3 matrix.
Mat3 hat(const Tangent3& xi);

/// Group exponential: (R(theta), B(theta) x).
Se2 exp(const Tangent3& xi);

/// Group logarithm with the angle taken in (-pi, pi].
///
/// Throws AntipodalHeading when the wrapped heading is within `tolerance` of
/// +-pi. Pass tolerance 0 to accept every heading (pi maps to +pi).
Tangent3 log(const Se2& g, double tolerance = kAntipodalTolerance);

/// Ad_g, with g exp(u) g^-1 = exp(Ad_g u).
Mat3 adjoint(const Se2& g);

/// Right Jacobian: exp(xi + d) ~ exp(xi) exp(Jr(xi) d).
Mat3 right_jacobian(const Tangent3& xi);
Mat3 right_jacobian_inverse(const Tangent3& xi);

/// Left Jacobian: exp(xi + d) ~ exp(Jl(xi) d) exp(xi).
Mat3 left_jacobian(const Tangent3& xi);
Mat3 left_jacobian_inverse(const Tangent3& xi);

}  // namespace invnav
