#pragma once

#include "drillsim/frame.hpp"
#include "drillsim/haptics.hpp"
#include "drillsim/plugin.hpp"
#include "drillsim/scene.hpp"
#include "drillsim/trajectory.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace drillsim {

struct SimConfig {
  double physics_hz = 1000.0;
  int render_every = 33;
  std::optional<int> width;   ///< overrides the scene camera
  std::optional<int> height;
  std::optional<double> baseline;
  int threads = 1;
  std::uint64_t seed = 0;
  const kernels::KernelTable* kernels = nullptr;
};

/// Source of control values, polled once per tick.
class InputSource {
 public:
  virtual ~InputSource() = default;
  /// Updates `latched` for `tick`. Returns false once the stream has ended.
  virtual bool poll(std::uint64_t tick, double t, ControlState& latched) = 0;
};

class TrajectoryInput : public InputSource {
 public:
  explicit TrajectoryInput(Trajectory traj) : traj_(std::move(traj)) {}
  bool poll(std::uint64_t, double t, ControlState& latched) override;

 private:
  Trajectory traj_;
};

/// Zero-order hold over asynchronously arriving control messages. Writers may
/// be any thread; the loop reads it at tick boundaries.
class ControlLatch : public InputSource {
 public:
  void set_drill(const Pose& pose, bool drilling);
  void set_camera(const Pose& pose);
  void close();
  bool closed() const { return closed_; }
  std::uint64_t updates() const { return updates_; }
  bool poll(std::uint64_t tick, double t, ControlState& latched) override;

 private:
  mutable std::mutex mu_;
  ControlState state_;
  std::atomic<bool> closed_{false};
  std::atomic<std::uint64_t> updates_{0};
};

struct RunSummary {
  std::uint64_t ticks = 0;
  std::uint64_t frames = 0;
  std::uint64_t edits = 0;
  std::uint64_t removed_voxels = 0;
  bool input_closed = false;
  std::vector<PluginError> plugin_errors;
};

/// Fixed-step loop: per tick latch input, update proxies, resolve the drill
/// (applying any voxel edit), run physics plugins; every render_every-th tick
/// also render the stereo pair plus passes 3-4 and run graphics plugins.
class Simulation {
 public:
  /// Loads the first volume object's slice stack.
  Simulation(const SceneDescription& scene, SimConfig config);
  /// Uses `volume` in place of the scene's volume (its origin is kept).
  Simulation(const SceneDescription& scene, VoxelVolume volume, SimConfig config);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  using FrameSink = std::function<void(const FrameBundle&)>;
  using TickSink = std::function<void(const TickRecord&)>;

  /// One tick. Ticks are 1-based; frame i is rendered at tick i * render_every.
  TickRecord step(const ControlState& control, const FrameSink& on_frame = {});

  /// Runs until `max_ticks` ticks, the input ends, or a plugin requests a stop.
  RunSummary run(InputSource& input, std::uint64_t max_ticks, const TickSink& on_tick = {},
                 const FrameSink& on_frame = {});

  /// Renders the current state without advancing time.
  FrameBundle render_now(std::uint64_t index = 0) const;

  const VoxelVolume& volume() const { return volume_; }
  const DrillState& drill() const { return drill_; }
  const DrillConfig& drill_config() const { return drill_config_; }
  const StereoRig& rig() const { return rig_; }
  const std::string& rig_name() const { return rig_name_; }
  const std::string& drill_name() const { return drill_name_; }
  const SceneDescription& scene() const { return scene_; }
  const SimConfig& config() const { return config_; }
  PluginHost& plugins() { return *host_; }
  std::uint64_t tick() const { return world_.tick; }
  std::uint64_t frames() const { return frames_; }
  std::uint64_t timestamp_ns(std::uint64_t tick) const;
  /// Scene facts for make_builtin_trajectory.
  TrajectoryContext trajectory_context() const;
  /// Names published on the pose topic, in order.
  std::vector<std::string> tracked_names() const;

 private:
  void init();
  RenderScene render_scene() const;
  std::vector<NamedPose> tracked_poses() const;

  SceneDescription scene_;
  SimConfig config_;
  VoxelVolume volume_;
  std::string volume_name_;
  std::string rig_name_;
  std::string drill_name_;
  Frustum frustum_;
  double baseline_ = 0.065;
  StereoRig rig_;
  DrillConfig drill_config_;
  DrillState drill_;
  WorldState world_;
  std::unique_ptr<PluginHost> host_;
  std::optional<FrameBundle> last_frame_;
  std::uint64_t frames_ = 0;
};

}  // namespace drillsim
