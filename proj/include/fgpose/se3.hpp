#pragma once

// SO(3) / SE(3) primitives: hat maps, closed-form exponentials, pose errors.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fgpose/errors.hpp"

namespace fgpose {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Below this rotation angle the Rodrigues / left-Jacobian coefficients use their series.
inline constexpr double kSmallAngle = 1e-8;

/// Group velocity [omega; v] driving dH/dt = H [Y]^.
struct Twist {
  Vec3 omega = Vec3::Zero();  // rad/s
  Vec3 v = Vec3::Zero();      // m/s

  Vec6 vector() const {
    Vec6 out;
    out << omega, v;
    return out;
  }
  static Twist from_vector(const Vec6& y) { return {y.head<3>(), y.tail<3>()}; }
};

/// Rigid-body pose [R P; 0 1].
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();

  static Pose identity() { return {}; }

  static Pose from_matrix(const Mat4& h) {
    return {h.topLeftCorner<3, 3>(), h.topRightCorner<3, 1>()};
  }

  Mat4 matrix() const {
    Mat4 h = Mat4::Identity();
    h.topLeftCorner<3, 3>() = rotation;
    h.topRightCorner<3, 1>() = position;
    return h;
  }

  Pose inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -rt * position};
  }

  Pose operator*(const Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.position + position};
  }

  /// Homogeneous point [x; 1].
  Vec3 transform_point(const Vec3& x) const { return rotation * x + position; }
  /// Direction [x; 0].
  Vec3 transform_direction(const Vec3& x) const { return rotation * x; }
};

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<  0.0,   -v.z(),  v.y(),
        v.z(),  0.0,   -v.x(),
       -v.y(),  v.x(),  0.0;
  // clang-format on
  return s;
}

/// Inverse of skew(); reads the strictly lower/upper entries without symmetrizing.
inline Vec3 unskew(const Mat3& s) { return {s(2, 1), s(0, 2), s(1, 0)}; }

/// [Y]^ : 4x4 element of se(3).
inline Mat4 wedge(const Twist& t) {
  Mat4 x = Mat4::Zero();
  x.topLeftCorner<3, 3>() = skew(t.omega);
  x.topRightCorner<3, 1>() = t.v;
  return x;
}

inline Twist vee(const Mat4& x) { return {unskew(x.topLeftCorner<3, 3>()), x.topRightCorner<3, 1>()}; }

/// [x; x0] ^ [y; y0] = [x × y; x0 y − y0 x].
inline Vec6 cross6(const Vec3& x, double x0, const Vec3& y, double y0) {
  Vec6 out;
  out << x.cross(y), x0 * y - y0 * x;
  return out;
}

inline Mat3 so3_exp(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 k = skew(w);
  double a, b;
  if (theta < kSmallAngle) {
    a = 1.0 - theta * theta / 6.0;
    b = 0.5 - theta * theta / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Mat3::Identity() + a * k + b * k * k;
}

/// Left Jacobian of SO(3): J_l(w) = I + (1−cos θ)/θ² [w]× + (θ − sin θ)/θ³ [w]×².
inline Mat3 so3_left_jacobian(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 k = skew(w);
  double b, c;
  if (theta < kSmallAngle) {
    b = 0.5 - theta * theta / 24.0;
    c = 1.0 / 6.0 - theta * theta / 120.0;
  } else {
    const double t2 = theta * theta;
    b = (1.0 - std::cos(theta)) / t2;
    c = (theta - std::sin(theta)) / (t2 * theta);
  }
  return Mat3::Identity() + b * k + c * k * k;
}

/// exp([t]^ · dt) in closed form.
inline Pose se3_exp(const Twist& t, double dt) {
  const Vec3 phi = t.omega * dt;
  return {so3_exp(phi), so3_left_jacobian(phi) * (t.v * dt)};
}

/// Nearest rotation in Frobenius norm (polar decomposition).
inline Mat3 project_to_so3(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

inline constexpr double kRotationTolerance = 1e-9;

/// ‖RᵀR − I‖_F + |det R − 1|.
inline double rotation_defect(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).norm() + std::abs(r.determinant() - 1.0);
}

/// ‖R‖_I = tr(I − R) / 4, which equals sin²(angle / 2).
inline double attitude_error_norm(const Mat3& r) {
  return std::clamp(0.25 * (3.0 - r.trace()), 0.0, 1.0);
}

struct PoseError {
  Mat3 rotation;  // R̃ = R̂ Rᵀ
  Vec3 position;  // P̃ = P̂ − R̃ P
};

/// H̃ = Ĥ H⁻¹.
inline PoseError pose_error(const Pose& truth, const Pose& estimate) {
  const Mat3 r = estimate.rotation * truth.rotation.transpose();
  return {r, estimate.position - r * truth.position};
}

/// Roll φ, pitch θ, yaw ψ with R = Rz(ψ) Ry(θ) Rx(φ).
struct EulerZYX {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

inline Mat3 rotation_from_euler(const EulerZYX& e) {
  const double cr = std::cos(e.roll), sr = std::sin(e.roll);
  const double cp = std::cos(e.pitch), sp = std::sin(e.pitch);
  const double cy = std::cos(e.yaw), sy = std::sin(e.yaw);
  Mat3 r;
  // clang-format off
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp,     cp * sr,                cp * cr;
  // clang-format on
  return r;
}

/// At gimbal lock (|θ| within 1e-6 of π/2) roll is pinned to zero and yaw absorbs it.
inline EulerZYX euler_zyx(const Mat3& r) {
  const double s = std::clamp(-r(2, 0), -1.0, 1.0);
  const double pitch = std::asin(s);
  if (std::abs(std::abs(pitch) - std::numbers::pi / 2.0) < 1e-6) {
    return {0.0, pitch, std::atan2(-r(0, 1), r(1, 1))};
  }
  return {std::atan2(r(2, 1), r(2, 2)), pitch, std::atan2(r(1, 0), r(0, 0))};
}

inline constexpr double kDegenerateNorm = 1e-12;

inline Vec3 normalize3(const Vec3& v) {
  const double n = v.norm();
  if (!(n > kDegenerateNorm)) throw DegenerateMeasurement("vector norm below 1e-12 cannot be normalized");
  return v / n;
}

inline bool is_finite(const Pose& p) { return p.rotation.allFinite() && p.position.allFinite(); }

}  // namespace fgpose
