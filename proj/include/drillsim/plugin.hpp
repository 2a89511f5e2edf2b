#pragma once

#include "drillsim/frame.hpp"
#include "drillsim/scene.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace drillsim {

/// What a plugin may do through its ScopeHandle. Sets nest by scope:
/// object ⊂ model ⊂ world ⊂ simulator.
enum Capability : std::uint32_t {
  kReadPoses = 1u << 0,
  kMoveSelf = 1u << 1,
  kMoveModel = 1u << 2,
  kMoveAny = 1u << 3,
  kSetGravity = 1u << 4,
  kObserveFrames = 1u << 5,
  kStopSimulation = 1u << 6,
};

std::uint32_t capabilities_for(Scope scope);

/// Mutable world state shared by the loop and its plugins (loop thread only).
struct WorldState {
  const SceneDescription* scene = nullptr;
  std::map<std::string, Pose> poses;  ///< world poses of every object
  Vec3 gravity = Vec3::Zero();
  bool gravity_enabled = true;
  const FrameBundle* latest_frame = nullptr;
  std::uint64_t tick = 0;
  bool stop_requested = false;
};

/// A plugin's view of the world, restricted to the capabilities of its scope.
/// Every call outside the granted set throws Error(ScopeViolation).
class ScopeHandle {
 public:
  ScopeHandle(Scope scope, std::string target, WorldState* world);

  Scope scope() const { return scope_; }
  const std::string& target() const { return target_; }
  std::uint32_t capabilities() const { return caps_; }
  bool allows(std::uint32_t caps) const { return (caps_ & caps) == caps; }

  Pose pose(const std::string& object) const;
  void set_pose(const std::string& object, const Pose& pose);
  void set_gravity_enabled(bool on);
  bool gravity_enabled() const;
  const FrameBundle* latest_frame() const;
  std::uint64_t tick() const;
  void request_stop();

 private:
  void require(std::uint32_t caps, const std::string& what) const;

  Scope scope_;
  std::string target_;
  std::uint32_t caps_;
  WorldState* world_;
};

class Plugin {
 public:
  virtual ~Plugin() = default;
  virtual void on_init(ScopeHandle&, const SceneDescription&) {}
  virtual void on_physics_update(ScopeHandle&, double /*dt*/) {}
  virtual void on_graphics_update(ScopeHandle&, double /*dt*/) {}
  virtual void on_shutdown(ScopeHandle&) {}
};

using PluginFactory = std::function<std::unique_ptr<Plugin>(const PluginSpec&)>;

/// Static registry; builtins are gravity_toggle, object_mover and frame_observer.
bool plugin_registered(const std::string& name);
void register_plugin_factory(const std::string& name, PluginFactory factory);
std::vector<std::string> registered_plugins();
std::unique_ptr<Plugin> create_plugin(const PluginSpec& spec);

struct PluginError {
  std::string plugin;
  std::uint64_t tick = 0;
  std::string message;
};

/// Owns bound plugins and isolates their failures: a throwing callback disables
/// that plugin and is recorded, the rest keep running.
class PluginHost {
 public:
  explicit PluginHost(WorldState* world) : world_(world) {}
  ~PluginHost();

  /// Instantiates and binds the plugin, then calls on_init. Throws UnknownPlugin,
  /// or InvalidScene for a missing object/model target.
  ScopeHandle& register_plugin(const PluginSpec& spec);

  void physics_update(double dt);
  void graphics_update(double dt);
  void shutdown();

  const std::vector<PluginError>& errors() const { return errors_; }
  std::size_t size() const { return bound_.size(); }
  bool enabled(std::size_t i) const { return bound_[i].enabled; }
  Plugin& plugin(std::size_t i) { return *bound_[i].plugin; }

 private:
  struct Bound {
    PluginSpec spec;
    std::unique_ptr<Plugin> plugin;
    std::unique_ptr<ScopeHandle> handle;
    bool enabled = true;
  };
  template <typename F>
  void guarded(Bound& b, F&& f);

  WorldState* world_;
  std::vector<Bound> bound_;
  std::vector<PluginError> errors_;
  bool shut_down_ = false;
};

/// Counts frames it has seen; the builtin simulator-scope recorder probe.
class FrameObserver : public Plugin {
 public:
  void on_graphics_update(ScopeHandle& h, double dt) override;
  std::uint64_t frames_seen = 0;
  std::uint64_t last_index = 0;
};

}  // namespace drillsim
