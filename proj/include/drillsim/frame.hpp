#pragma once

#include "drillsim/camera.hpp"
#include "drillsim/renderer.hpp"
#include "drillsim/volume.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drillsim {

struct NamedPose {
  std::string name;
  Pose pose;  ///< world_from_object
  friend bool operator==(const NamedPose&, const NamedPose&) = default;
};

/// Camera parameters as published: frustum, pinhole intrinsics and pose.
struct CameraInfo {
  std::string name;
  Frustum frustum;
  Intrinsics k;
  double baseline = 0.0;
  Pose pose;
};

/// Everything produced for one rendered frame; all parts share `timestamp_ns`.
struct FrameBundle {
  std::uint64_t index = 0;  ///< 1-based frame number
  std::uint64_t tick = 0;
  std::uint64_t timestamp_ns = 0;
  StereoFrame stereo;
  std::vector<float> depth;  ///< left camera, meters, +inf where nothing was hit
  PointCloud cloud;          ///< left camera frame
  CameraInfo left_info;
  CameraInfo right_info;
  std::vector<NamedPose> poses;
};

/// Per-tick record; exactly one per physics tick.
struct TickRecord {
  std::uint64_t tick = 0;
  std::uint64_t timestamp_ns = 0;
  std::vector<NamedPose> poses;
  Pose drill_input;
  bool drilling_enabled = false;
  Vec3 force = Vec3::Zero();
  bool contact = false;
  int s_max = 0;
  std::optional<VoxelEdit> edit;
  std::optional<std::uint64_t> frame;  ///< FrameBundle index if one was rendered this tick
};

}  // namespace drillsim
