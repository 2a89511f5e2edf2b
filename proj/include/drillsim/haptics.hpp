#pragma once

#include "drillsim/math.hpp"
#include "drillsim/volume.hpp"

#include <optional>
#include <vector>

namespace drillsim {

enum class CursorRole { Tip, Shaft };

/// A proxy/goal sphere pair rigidly attached to the drill.
struct ToolCursor {
  CursorRole role = CursorRole::Tip;
  double radius = 0.0;
  Vec3 offset = Vec3::Zero();  ///< cursor center in the drill frame; the tip sits at the origin
  Vec3 proxy = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
};

struct DrillConfig {
  double tip_radius = 0.002;     ///< burr radius, m
  double shaft_radius = 0.0015;  ///< m
  int shaft_count = 5;
  double shaft_start = 0.005;    ///< distance from the tip to the first shaft cursor, m
  double shaft_spacing = 0.005;  ///< distance between consecutive shaft cursors, m
  Vec3 shaft_axis = Vec3::UnitZ();  ///< drill frame, pointing from the tip toward the handle
  double stiffness = 500.0;      ///< N/m
  double max_force = 5.0;        ///< N
  double epsilon = 1e-6;         ///< error threshold for the shaft branch, m
  double contact_tolerance = 2e-5;  ///< proxy stop accuracy and removal margin, m
  int slide_iterations = 3;
  double render_length = 0.08;   ///< visual shaft length, m
};

struct DrillState {
  Pose pose;        ///< resolved drill pose
  Pose input_pose;  ///< latest commanded pose
  std::vector<ToolCursor> cursors;  ///< [tip, s_0, ..., s_n]
  Vec3 force = Vec3::Zero();
  bool drilling_enabled = false;
  bool contact = false;

  /// Cursor layout from `config`; every proxy and goal starts at `initial`.
  static DrillState make(const DrillConfig& config, const Pose& initial);
};

struct ProxyResult {
  std::vector<Vec3> errors;  ///< proxy - goal per cursor
  Vec3 e_max = Vec3::Zero();
  int s_max = 0;             ///< 0 is the tip; ties resolve to the lowest index
  bool contact = false;
};

/// Sphere of `radius` at `center` collides when any occupied voxel center lies
/// strictly inside it.
bool sphere_collides(const VoxelVolume& volume, const Vec3& center, double radius);

/// Moves each proxy toward its goal, stopping at first contact and sliding along
/// the surface tangent plane for up to `slide_iterations` attempts.
ProxyResult update_proxies(const Pose& input_pose, const VoxelVolume& volume, DrillState& state,
                           const DrillConfig& config);

/// Spring law F = k * e, magnitude clamped to f_max.
Vec3 control_law(const Vec3& e, double k, double f_max);

struct DrillResolution {
  Pose pose;
  Vec3 force = Vec3::Zero();
  std::optional<VoxelEdit> edit;  ///< set only on the tip branch with drilling enabled
  bool shaft_blocked = false;
};

/// Shaft branch when the largest error exceeds epsilon on a shaft cursor: the
/// drill snaps to the pose implied by that shaft proxy and nothing is removed.
/// Otherwise the drill follows the tip proxy and, if drilling, clears voxels
/// within tip_radius + contact_tolerance of it.
DrillResolution resolve_drill(DrillState& state, const ProxyResult& pr, VoxelVolume& volume,
                              const DrillConfig& config, std::uint64_t tick);

}  // namespace drillsim
