#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>

#include "affordkit/core/error.hpp"

namespace affordkit::geom {

/// 6-vector tangent parameterization: rotational part first (radians), then
/// translational part (meters).
template <typename Scalar>
using Twist = Eigen::Matrix<Scalar, 6, 1>;

using Twistd = Twist<double>;

/// Rigid transform stored as unit quaternion + translation. Convention is
/// world-from-camera: `pose * p_camera` yields the point in world coordinates.
/// The quaternion is renormalized after every composition so long chains do
/// not drift.
template <typename Scalar>
class Pose {
 public:
  using Quaternion = Eigen::Quaternion<Scalar>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Pose() : q_(Quaternion::Identity()), t_(Vector3::Zero()) {}

  Pose(const Quaternion& q, const Vector3& t) : q_(q.normalized()), t_(t) {}

  static Pose identity() { return Pose(); }

  const Quaternion& rotation() const { return q_; }
  const Vector3& translation() const { return t_; }
  Vector3& translation() { return t_; }

  Eigen::Matrix<Scalar, 3, 3> rotation_matrix() const { return q_.toRotationMatrix(); }

  Pose inverse() const {
    const Quaternion qi = q_.conjugate();
    return Pose(qi, qi * (-t_));
  }

  Pose operator*(const Pose& rhs) const {
    return Pose(q_ * rhs.q_, q_ * rhs.t_ + t_);
  }

  Vector3 operator*(const Vector3& p) const { return q_ * p + t_; }

  bool isApprox(const Pose& rhs, Scalar tol) const {
    // q and -q encode the same rotation
    const Scalar qd = std::min((q_.coeffs() - rhs.q_.coeffs()).norm(),
                               (q_.coeffs() + rhs.q_.coeffs()).norm());
    return qd <= tol && (t_ - rhs.t_).norm() <= tol;
  }

 private:
  Quaternion q_;
  Vector3 t_;
};

using Posed = Pose<double>;
using Posef = Pose<float>;

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> transform_point(const Pose<Scalar>& pose,
                                            const Eigen::Matrix<Scalar, 3, 1>& p) {
  return pose * p;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> skew(const Eigen::Matrix<Scalar, 3, 1>& w) {
  Eigen::Matrix<Scalar, 3, 3> m;
  m << Scalar(0), -w.z(), w.y(), w.z(), Scalar(0), -w.x(), -w.y(), w.x(), Scalar(0);
  return m;
}

/// Exponential map se(3) -> SE(3).
template <typename Scalar>
Pose<Scalar> se3_exp(const Twist<Scalar>& xi) {
  const Eigen::Matrix<Scalar, 3, 1> omega = xi.template head<3>();
  const Eigen::Matrix<Scalar, 3, 1> upsilon = xi.template tail<3>();
  const Scalar theta = omega.norm();
  const Eigen::Matrix<Scalar, 3, 3> hat = skew(omega);

  Eigen::Matrix<Scalar, 3, 3> rot;
  Eigen::Matrix<Scalar, 3, 3> jac;  // left Jacobian mapping upsilon to translation
  const Eigen::Matrix<Scalar, 3, 3> eye = Eigen::Matrix<Scalar, 3, 3>::Identity();
  if (theta < Scalar(1e-8)) {
    rot = eye + hat + Scalar(0.5) * hat * hat;
    jac = eye + Scalar(0.5) * hat + hat * hat / Scalar(6);
  } else {
    const Scalar s = std::sin(theta), c = std::cos(theta);
    rot = eye + (s / theta) * hat + ((Scalar(1) - c) / (theta * theta)) * hat * hat;
    jac = eye + ((Scalar(1) - c) / (theta * theta)) * hat +
          ((theta - s) / (theta * theta * theta)) * hat * hat;
  }
  return Pose<Scalar>(Eigen::Quaternion<Scalar>(rot), jac * upsilon);
}

/// Logarithm map SE(3) -> se(3). Rotation angle must stay below pi.
template <typename Scalar>
Twist<Scalar> se3_log(const Pose<Scalar>& pose) {
  Eigen::Quaternion<Scalar> q = pose.rotation();
  if (q.w() < Scalar(0)) q.coeffs() = -q.coeffs();
  const Scalar vec_norm = q.vec().norm();
  const Scalar theta = Scalar(2) * std::atan2(vec_norm, q.w());
  if (theta >= Scalar(M_PI) - Scalar(1e-6))
    throw Error(ErrorCode::LogNearPi, "rotation angle too close to pi");

  Eigen::Matrix<Scalar, 3, 1> omega;
  if (vec_norm < Scalar(1e-12)) {
    omega = Scalar(2) * q.vec();  // small-angle: q.vec() ~ omega/2
  } else {
    omega = (theta / vec_norm) * q.vec();
  }

  const Eigen::Matrix<Scalar, 3, 3> hat = skew(omega);
  const Eigen::Matrix<Scalar, 3, 3> eye = Eigen::Matrix<Scalar, 3, 3>::Identity();
  Eigen::Matrix<Scalar, 3, 3> jac_inv;
  if (theta < Scalar(1e-8)) {
    jac_inv = eye - Scalar(0.5) * hat + hat * hat / Scalar(12);
  } else {
    const Scalar half = theta / Scalar(2);
    const Scalar cot_term =
        (Scalar(1) - half * std::cos(half) / std::sin(half)) / (theta * theta);
    jac_inv = eye - Scalar(0.5) * hat + cot_term * hat * hat;
  }

  Twist<Scalar> xi;
  xi.template head<3>() = omega;
  xi.template tail<3>() = jac_inv * pose.translation();
  return xi;
}

}  // namespace affordkit::geom
