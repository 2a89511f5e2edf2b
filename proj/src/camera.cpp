#include "drillsim/camera.hpp"

#include "drillsim/error.hpp"

#include <cmath>
#include <limits>

namespace drillsim {

namespace {
constexpr double kDepthScale = 16777216.0;  // 2^24
constexpr std::uint32_t kMaxPacked = 0xFFFFFFu;
}  // namespace

void Frustum::validate() const {
  if (!(near_plane > 0.0) || !(far_plane > near_plane))
    throw Error(ErrorCode::InvalidArgument, "frustum requires 0 < near < far");
  if (!(fva > 0.0) || !(fva < kPi))
    throw Error(ErrorCode::InvalidArgument, "frustum fva must lie in (0, pi)");
  if (width < 1 || height < 1)
    throw Error(ErrorCode::InvalidArgument, "frustum image size must be positive");
}

MaxDims max_dims(const Frustum& fr) {
  MaxDims md;
  md.x = 2.0 * fr.far_plane * std::tan(fr.fva / 2.0);
  md.y = md.x * fr.aspect();
  md.z = fr.far_plane - fr.near_plane;
  return md;
}

Intrinsics intrinsics(const Frustum& fr) {
  Intrinsics k;
  k.fx = k.fy = fr.height / (2.0 * std::tan(fr.fva / 2.0));
  k.cx = fr.width / 2.0;
  k.cy = fr.height / 2.0;
  return k;
}

Mat4 projection_matrix(const Frustum& fr) {
  const double n = fr.near_plane;
  const double f = fr.far_plane;
  const double cot = 1.0 / std::tan(fr.fva / 2.0);
  Mat4 p = Mat4::Zero();
  p(0, 0) = cot / fr.aspect();
  p(1, 1) = cot;
  p(2, 2) = -(f + n) / (f - n);
  p(2, 3) = -2.0 * f * n / (f - n);
  p(3, 2) = -1.0;
  return p;
}

double window_depth(double depth, const Frustum& fr) {
  const double n = fr.near_plane;
  const double f = fr.far_plane;
  return (f * (depth - n)) / ((f - n) * depth);
}

PackedDepth pack_depth(double z01) {
  if (!(z01 >= 0.0) || !(z01 < 1.0))
    throw Error(ErrorCode::DomainError, "packed depth must lie in [0, 1)");
  auto z = static_cast<std::uint32_t>(std::nearbyint(z01 * kDepthScale));
  if (z > kMaxPacked) z = kMaxPacked;
  PackedDepth out;
  out.bytes[0] = static_cast<std::uint8_t>(z & 0xFFu);
  out.bytes[1] = static_cast<std::uint8_t>((z >> 8) & 0xFFu);
  out.bytes[2] = static_cast<std::uint8_t>((z >> 16) & 0xFFu);
  out.bytes[3] = 0;
  return out;
}

double unpack_depth(const PackedDepth& packed) {
  const std::uint32_t z = (std::uint32_t{packed.bytes[3]} << 24) | (std::uint32_t{packed.bytes[2]} << 16) |
                          (std::uint32_t{packed.bytes[1]} << 8) | std::uint32_t{packed.bytes[0]};
  return static_cast<double>(z) / kDepthScale;
}

Fragment project_to_fragment(const Vec3& p_cam, const Frustum& fr) {
  const Eigen::Vector4d clip = projection_matrix(fr) * p_cam.homogeneous();
  if (std::abs(clip.w()) < 1e-12) throw Error(ErrorCode::SingularProjection, "point on camera plane");
  const Eigen::Vector3d ndc = clip.head<3>() / clip.w();
  Fragment frag;
  frag.x = (ndc.x() + 1.0) * fr.width / 2.0 - 0.5;
  frag.y = (1.0 - ndc.y()) * fr.height / 2.0 - 0.5;
  frag.z01 = (ndc.z() + 1.0) / 2.0;
  return frag;
}

std::array<double, 2> project_pinhole(const Vec3& p_cam, const Intrinsics& k) {
  // OpenGL camera frame -> vision frame (x right, y down, z forward)
  const double x = p_cam.x();
  const double y = -p_cam.y();
  const double z = -p_cam.z();
  return {k.fx * x / z + k.cx, k.fy * y / z + k.cy};
}

NormalizedPoint NormalizedPoint::sentinel() {
  const double inf = std::numeric_limits<double>::infinity();
  return {inf, inf, inf};
}

bool NormalizedPoint::is_valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

UnprojectParams UnprojectParams::from(const Frustum& fr) {
  UnprojectParams p;
  const Mat4 inv = projection_matrix(fr).inverse();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) p.inv[r * 4 + c] = inv(r, c);
  const MaxDims md = max_dims(fr);
  p.width = fr.width;
  p.height = fr.height;
  p.md_x = md.x;
  p.md_y = md.y;
  p.half_md_x = md.x / 2.0;
  p.half_md_y = md.y / 2.0;
  p.near_plane = fr.near_plane;
  p.range = fr.far_plane - fr.near_plane;
  return p;
}

NormalizedPoint unproject_fragment(double frag_x, double frag_y, double z01, const Frustum& fr) {
  const UnprojectParams p = UnprojectParams::from(fr);
  const double xn = ((frag_x + 0.5) * 2.0) / p.width - 1.0;
  const double yn = 1.0 - ((frag_y + 0.5) * 2.0) / p.height;
  const double zn = z01 * 2.0 - 1.0;
  const auto& m = p.inv;
  const double cw = ((m[12] * xn + m[13] * yn) + m[14] * zn) + m[15];
  if (std::abs(cw) < 1e-12) throw Error(ErrorCode::SingularProjection, "clip-space w vanished");
  return unproject_with(p, frag_x, frag_y, z01);
}

Vec3 rescale_point(const NormalizedPoint& n, const Frustum& fr) {
  if (!n.is_valid()) return Vec3::Constant(std::numeric_limits<double>::infinity());
  const UnprojectParams p = UnprojectParams::from(fr);
  double out[3];
  rescale_with(p, n, out);
  return {out[0], out[1], out[2]};
}

Pose StereoRig::right_from_left() const { return right.pose.inverse() * left.pose; }

StereoRig build_stereo_rig(const Pose& center, const Frustum& fr, double baseline) {
  if (!(baseline >= 0.0)) throw Error(ErrorCode::InvalidArgument, "baseline must be >= 0");
  StereoRig rig;
  rig.baseline = baseline;
  const Vec3 x_axis = center.rotate(Vec3::UnitX());
  rig.left = {fr, {center.position - 0.5 * baseline * x_axis, center.orientation}};
  rig.right = {fr, {center.position + 0.5 * baseline * x_axis, center.orientation}};
  return rig;
}

}  // namespace drillsim
