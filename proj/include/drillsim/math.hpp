#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <cstdint>

namespace drillsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

/// Roll/pitch/yaw in radians, XYZ fixed-axis convention: R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct EulerXYZ {
  double roll = 0, pitch = 0, yaw = 0;
};

Quat quat_from_euler(const EulerXYZ& e);
EulerXYZ euler_from_quat(const Quat& q);

/// Unit quaternion with w >= 0.
Quat canonical(Quat q);

/// Rigid transform. Interpreted as parent_from_child: transform(p) maps a
/// point expressed in the child frame into the parent frame.
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  static Pose identity() { return {}; }
  static Pose from_position(const Vec3& p) { return {p, Quat::Identity()}; }

  Vec3 transform(const Vec3& p) const { return orientation * p + position; }
  Vec3 rotate(const Vec3& v) const { return orientation * v; }
  Pose inverse() const;
  Mat3 rotation() const { return orientation.toRotationMatrix(); }
  Pose normalized() const { return {position, canonical(orientation)}; }

  friend Pose operator*(const Pose& a, const Pose& b) {
    return {a.orientation * b.position + a.position, a.orientation * b.orientation};
  }
  /// Exact component equality.
  friend bool operator==(const Pose& a, const Pose& b) {
    return a.position == b.position && a.orientation.coeffs() == b.orientation.coeffs();
  }
};

bool bit_equal(const Pose& a, const Pose& b);
bool is_finite(const Pose& p);

/// Geodesic angle between two orientations, radians in [0, pi].
double rotation_angle(const Quat& a, const Quat& b);

/// Linear position blend + slerp orientation.
Pose interpolate(const Pose& a, const Pose& b, double u);

}  // namespace drillsim
