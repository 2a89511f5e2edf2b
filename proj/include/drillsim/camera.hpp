#pragma once

#include "drillsim/math.hpp"

#include <array>
#include <cstdint>

namespace drillsim {

/// Perspective frustum. The aspect ratio is always width / height.
struct Frustum {
  double near_plane = 0.01;
  double far_plane = 1.0;
  double fva = kPi / 4.0;  ///< vertical field-view angle, radians
  int width = 640;
  int height = 480;

  double aspect() const { return static_cast<double>(width) / static_cast<double>(height); }
  friend bool operator==(const Frustum&, const Frustum&) = default;

  /// Throws Error(InvalidArgument) unless 0 < near < far, 0 < fva < pi and the image is non-empty.
  void validate() const;
};

/// Extents of the frustum used to normalize and rescale camera-space points.
struct MaxDims {
  double x = 0, y = 0, z = 0;
};

struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
};

/// Depth in four one-byte channels; bytes[0] is the least significant.
struct PackedDepth {
  std::array<std::uint8_t, 4> bytes{};
  friend bool operator==(const PackedDepth&, const PackedDepth&) = default;
};

/// Output of the depth linearization pass. Components lie in [0, 1] along y and
/// z for points inside the frustum. Along x the range is [(1 - AR) / 2, (1 + AR) / 2]
/// because the x extent of MaxDims is taken from the vertical angle.
struct NormalizedPoint {
  double x = 0, y = 0, z = 0;

  static NormalizedPoint sentinel();
  bool is_valid() const;
};

/// Window coordinates: pixel index space (pixel i covers [i - 0.5, i + 0.5]) plus
/// the normalized nonlinear depth-buffer value in [0, 1].
struct Fragment {
  double x = 0, y = 0, z01 = 0;
};

MaxDims max_dims(const Frustum& fr);
Intrinsics intrinsics(const Frustum& fr);

/// Right-handed OpenGL perspective matrix: camera looks down -z, depth maps to [-1, 1].
Mat4 projection_matrix(const Frustum& fr);

/// Depth-buffer value for a point at camera-space distance `depth` along -z.
double window_depth(double depth, const Frustum& fr);

PackedDepth pack_depth(double z01);
double unpack_depth(const PackedDepth& packed);

/// Camera-space point (OpenGL frame) to window coordinates via the projection matrix.
Fragment project_to_fragment(const Vec3& p_cam, const Frustum& fr);

/// Camera-space point (OpenGL frame) to continuous pinhole pixel coordinates
/// (u, v) = (fx * X / Z + cx, fy * Y / Z + cy) in the x-right, y-down, z-forward
/// frame. Pixel i spans [i, i + 1), so u = fragment.x + 0.5.
std::array<double, 2> project_pinhole(const Vec3& p_cam, const Intrinsics& k);

/// Inverse projection of one fragment followed by normalization by MaxDims.
NormalizedPoint unproject_fragment(double frag_x, double frag_y, double z01, const Frustum& fr);

/// Camera-space point from a normalized point. The camera looks down -z, so the
/// returned z equals -(near + N_z * (far - near)). Sentinel input maps to +inf.
Vec3 rescale_point(const NormalizedPoint& n, const Frustum& fr);

/// Precomputed constants for the per-pixel unprojection, shared by every kernel variant.
struct UnprojectParams {
  std::array<double, 16> inv{};  ///< row-major inverse projection
  double width = 0, height = 0;
  double md_x = 0, md_y = 0;
  double half_md_x = 0, half_md_y = 0;
  double near_plane = 0, range = 0;

  static UnprojectParams from(const Frustum& fr);
};

/// Fixed evaluation order; the SIMD kernels reproduce it operation for operation.
inline NormalizedPoint unproject_with(const UnprojectParams& p, double frag_x, double frag_y,
                                      double z01) {
  const double xn = ((frag_x + 0.5) * 2.0) / p.width - 1.0;
  const double yn = 1.0 - ((frag_y + 0.5) * 2.0) / p.height;
  const double zn = z01 * 2.0 - 1.0;
  const auto& m = p.inv;
  const double cx = ((m[0] * xn + m[1] * yn) + m[2] * zn) + m[3];
  const double cy = ((m[4] * xn + m[5] * yn) + m[6] * zn) + m[7];
  const double cz = ((m[8] * xn + m[9] * yn) + m[10] * zn) + m[11];
  const double cw = ((m[12] * xn + m[13] * yn) + m[14] * zn) + m[15];
  const double px = cx / cw;
  const double py = cy / cw;
  const double pz = cz / cw;
  return {(px + p.half_md_x) / p.md_x, (py + p.half_md_y) / p.md_y, (-pz - p.near_plane) / p.range};
}

inline void rescale_with(const UnprojectParams& p, const NormalizedPoint& n, double out[3]) {
  out[0] = n.x * p.md_x - p.half_md_x;
  out[1] = n.y * p.md_y - p.half_md_y;
  out[2] = -(p.near_plane + n.z * p.range);
}

/// A camera is a frustum plus its world pose (world_from_camera).
struct CameraModel {
  Frustum frustum;
  Pose pose;

  Vec3 to_camera(const Vec3& world) const { return pose.inverse().transform(world); }
};

struct StereoRig {
  CameraModel left;
  CameraModel right;
  double baseline = 0;

  /// Maps points expressed in the left camera frame into the right camera frame.
  /// For a rectified rig this is a pure translation of (-baseline, 0, 0).
  Pose right_from_left() const;
};

/// Cameras sit at -baseline/2 and +baseline/2 along the center pose's +x axis and
/// share its orientation.
StereoRig build_stereo_rig(const Pose& center, const Frustum& fr, double baseline);

}  // namespace drillsim
