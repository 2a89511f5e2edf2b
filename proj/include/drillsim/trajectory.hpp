#pragma once

#include "drillsim/math.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace drillsim {

enum class Interpolation { Hold, Linear };

struct TrajectorySample {
  double t = 0.0;  ///< seconds
  std::optional<Pose> camera_pose;
  std::optional<Pose> drill_pose;
  std::optional<bool> drilling_enabled;
  friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

/// Latched control values; unset channels keep the scene's own poses.
struct ControlState {
  std::optional<Pose> camera_pose;
  std::optional<Pose> drill_pose;
  bool drilling_enabled = false;
  friend bool operator==(const ControlState&, const ControlState&) = default;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  Interpolation interpolation = Interpolation::Linear;

  /// Throws Error(InvalidArgument) unless t is strictly increasing and poses are finite.
  void validate() const;

  /// Each channel is interpolated between the samples that define it and held
  /// outside their range. drilling_enabled is always held.
  ControlState evaluate(double t) const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

Trajectory read_trajectory(const std::filesystem::path& path);
void write_trajectory(const Trajectory& traj, const std::filesystem::path& path);

enum class BuiltinSetting { MovingCamera, MovingDrill };
std::optional<BuiltinSetting> parse_builtin_setting(const std::string& name);

/// Scene facts the builtin trajectories are laid out against.
struct TrajectoryContext {
  Vec3 target = Vec3::Zero();  ///< world point the camera looks at (volume center)
  Vec3 extent = Vec3::Constant(0.1);  ///< volume size, m
  Pose camera_home;            ///< rig center pose at rest
  Pose drill_home;             ///< parked drill pose
  int render_every = 33;
  double physics_hz = 1000.0;
  std::uint64_t seed = 0;
};

/// Camera pose at `eye` looking at `target`, +y of the image roughly along `up`.
Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

/// Sized so that frame i (1-based, at tick i * render_every) sees sample i;
/// frame 1 is the trajectory start. moving_camera orbits the target with the
/// drill parked; moving_drill keeps the camera fixed and plunges the drill
/// into the volume with the burr on, then sweeps it sideways.
Trajectory make_builtin_trajectory(BuiltinSetting setting, int frames, const TrajectoryContext& ctx);

}  // namespace drillsim
