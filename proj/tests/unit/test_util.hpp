#pragma once

#include "drillsim/scene.hpp"
#include "drillsim/volume.hpp"

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

namespace testutil {

using namespace drillsim;

/// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("drillsim_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

/// Volume with every voxel in [lo, hi) (index space) set to `label`.
inline VoxelVolume block_volume(VoxelDims dims, double spacing, VoxelIndex lo, VoxelIndex hi, std::uint8_t label = 1,
                                Pose origin = {}) {
  VoxelVolume v(dims, Vec3::Constant(spacing), origin);
  v.set_label_info(label, {"bone", Rgb8{227, 218, 201}});
  for (int z = lo.z; z < hi.z; ++z)
    for (int y = lo.y; y < hi.y; ++y)
      for (int x = lo.x; x < hi.x; ++x) v.set_voxel(x, y, z, 255, label);
  return v;
}

/// Volume centered on the world origin.
inline Pose centered_origin(VoxelDims dims, double spacing) {
  return Pose::from_position(-0.5 * spacing * Vec3(dims.x, dims.y, dims.z));
}

/// Camera + drill + volume scene, styles resolved. The volume's slice source is
/// a placeholder; pass the VoxelVolume to Simulation directly.
inline SceneDescription tiny_scene(const Pose& camera_pose, const Pose& drill_pose, Frustum fr = {0.05, 1.0, kPi / 4, 64, 48},
                                   double baseline = 0.01) {
  SceneDescription s;
  ObjectSpec cam;
  cam.name = "cam";
  cam.kind = ObjectKind::Camera;
  cam.camera = CameraSpec{fr, baseline};
  cam.pose = camera_pose;
  s.objects[cam.name] = cam;

  ObjectSpec vol;
  vol.name = "patient";
  vol.kind = ObjectKind::Volume;
  vol.model = "patient";
  vol.volume = VolumeSource{};
  vol.volume->count = 1;
  s.objects[vol.name] = vol;

  ObjectSpec drill;
  drill.name = "drill";
  drill.kind = ObjectKind::Actuator;
  drill.model = "drill";
  drill.pose = drill_pose;
  drill.body = BodyGeometry{BodyShape::Capsule, 0.0015, 0.08, {190, 190, 200}};
  drill.drill = DrillConfig{};
  drill.style = RenderStyleSpec{Scope::Object, "segmentation_flat", {{"label", "10"}}};
  s.objects[drill.name] = drill;
  s.models.push_back({"patient", {"patient"}, {}, {}});
  s.models.push_back({"drill", {"drill"}, {}, {}});
  resolve_styles(s);
  return s;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline Quat random_quat(std::mt19937_64& rng) {
  Quat q(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
  return canonical(q.normalized());
}

}  // namespace testutil
