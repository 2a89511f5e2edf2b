#pragma once

#include "drillsim/camera.hpp"
#include "drillsim/kernels.hpp"
#include "drillsim/volume.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drillsim {

enum class BodyShape { Sphere, Capsule };

/// Analytic render primitive. A sphere uses `a` as its center; a capsule is the
/// segment a-b swept by `radius`.
struct RenderBody {
  std::string name;
  BodyShape shape = BodyShape::Sphere;
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.0;
  Rgb8 color{200, 200, 200};
  std::optional<std::uint8_t> seg_label;  ///< from the body's effective render style
};

/// Immutable per-frame snapshot of what the camera can see.
struct RenderScene {
  const VoxelVolume* volume = nullptr;
  std::vector<RenderBody> bodies;
  Vec3 light_direction = Vec3(0.3, -0.4, -1.0).normalized();  ///< world, from light toward scene
  double ambient = 0.25;
  Rgb8 background{0, 0, 0};
};

struct RenderOptions {
  int threads = 1;
  const kernels::KernelTable* kernels = nullptr;  ///< nullptr -> active_kernels()
};

/// Planes produced by the first two passes. `valid` is 1 where the ray hit something.
struct FrameBuffers {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> color;  ///< RGB8, row-major
  std::vector<PackedDepth> packed_depth;
  std::vector<std::uint8_t> seg;
  std::vector<std::uint8_t> valid;

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  friend bool operator==(const FrameBuffers&, const FrameBuffers&) = default;
};

/// First hit along one camera ray. `depth` is the camera-space distance along -z.
struct RayHit {
  bool hit = false;
  double depth = 0.0;
  std::uint8_t label = 0;
  Vec3 normal = Vec3::Zero();
  Rgb8 albedo{};
  int body = -1;  ///< index into RenderScene::bodies, or -1 for the volume
};

/// World-space ray through the center of pixel (px, py), scaled so that the
/// ray parameter equals camera depth.
struct CameraRay {
  Vec3 origin;
  Vec3 direction;
};
CameraRay pixel_ray(const CameraModel& cam, int px, int py);

/// Marches the volume with step 0.5 * min(spacing) along the ray, refines the
/// first crossing with one bisection, and intersects body primitives. Nearest
/// hit wins; ties go to the volume.
RayHit trace_ray(const RenderScene& scene, const CameraModel& cam, int px, int py);

/// Passes 1-2: shaded color, packed nonlinear depth, flat labels and the hit
/// mask, all from a single traversal per pixel. Throws Error(MissingStyle) when a
/// visible body has no segmentation label or a visible voxel label is absent
/// from the label table.
FrameBuffers render_passes(const RenderScene& scene, const CameraModel& cam, const RenderOptions& opts = {});

/// Color pass only (seg plane left zeroed). Labels are not checked.
FrameBuffers render_color(const RenderScene& scene, const CameraModel& cam, const RenderOptions& opts = {});

/// Segmentation pass: same visibility as render_color, no lighting.
std::vector<std::uint8_t> render_segmentation(const RenderScene& scene, const CameraModel& cam,
                                              const RenderOptions& opts = {});

/// Pass 3: unpack depth and unproject every valid pixel into normalized frustum
/// coordinates. Invalid pixels get NormalizedPoint::sentinel().
std::vector<NormalizedPoint> depth_linearize_pass(const FrameBuffers& fb, const Frustum& fr,
                                                  const RenderOptions& opts = {});

struct CloudPoint {
  float x = 0, y = 0, z = 0;  ///< camera frame, meters (camera looks down -z)
  Rgb8 rgb;
  std::uint8_t label = 0;
  std::uint16_t u = 0, v = 0;
};

struct PointCloud {
  std::vector<CloudPoint> points;
};

/// Pass 4: rescale normalized points to meters and attach color and label.
PointCloud assemble_point_cloud(const FrameBuffers& fb, const std::vector<NormalizedPoint>& normalized,
                                const Frustum& fr, const RenderOptions& opts = {});

/// Metric depth plane (meters along the view axis), +inf where nothing was hit.
std::vector<float> metric_depth(const std::vector<NormalizedPoint>& normalized, const Frustum& fr,
                                const RenderOptions& opts = {});

struct StereoFrame {
  FrameBuffers left;
  FrameBuffers right;
};

StereoFrame render_stereo(const RenderScene& scene, const StereoRig& rig, const RenderOptions& opts = {});

}  // namespace drillsim
