#include "drillsim/math.hpp"

#include <algorithm>
#include <cstring>

namespace drillsim {

Quat quat_from_euler(const EulerXYZ& e) {
  const Quat q = Eigen::AngleAxisd(e.yaw, Vec3::UnitZ()) *
                 Eigen::AngleAxisd(e.pitch, Vec3::UnitY()) *
                 Eigen::AngleAxisd(e.roll, Vec3::UnitX());
  return canonical(q);
}

EulerXYZ euler_from_quat(const Quat& q) {
  const Mat3 r = q.normalized().toRotationMatrix();
  EulerXYZ e;
  const double sp = std::clamp(-r(2, 0), -1.0, 1.0);
  e.pitch = std::asin(sp);
  if (std::abs(sp) < 1.0 - 1e-12) {
    e.roll = std::atan2(r(2, 1), r(2, 2));
    e.yaw = std::atan2(r(1, 0), r(0, 0));
  } else {
    // gimbal lock: fold everything into yaw
    e.roll = 0.0;
    e.yaw = std::atan2(-r(0, 1), r(1, 1));
  }
  return e;
}

Quat canonical(Quat q) {
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

Pose Pose::inverse() const {
  const Quat inv = orientation.conjugate();
  return {-(inv * position), inv};
}

bool bit_equal(const Pose& a, const Pose& b) {
  return std::memcmp(a.position.data(), b.position.data(), 3 * sizeof(double)) == 0 &&
         std::memcmp(a.orientation.coeffs().data(), b.orientation.coeffs().data(),
                     4 * sizeof(double)) == 0;
}

bool is_finite(const Pose& p) {
  return p.position.allFinite() && p.orientation.coeffs().allFinite();
}

double rotation_angle(const Quat& a, const Quat& b) {
  // atan2 form stays accurate near zero where acos(|<a,b>|) does not
  const Quat r = a.normalized().conjugate() * b.normalized();
  return 2.0 * std::atan2(r.vec().norm(), std::abs(r.w()));
}

Pose interpolate(const Pose& a, const Pose& b, double u) {
  Pose out;
  out.position = a.position + u * (b.position - a.position);
  out.orientation = canonical(a.orientation.slerp(u, b.orientation));
  return out;
}

}  // namespace drillsim
