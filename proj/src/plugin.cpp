#include "drillsim/plugin.hpp"

#include "drillsim/error.hpp"

#include <mutex>

namespace drillsim {

std::uint32_t capabilities_for(Scope scope) {
  const std::uint32_t object = kReadPoses | kMoveSelf;
  const std::uint32_t model = object | kMoveModel;
  const std::uint32_t world = model | kMoveAny | kSetGravity;
  const std::uint32_t simulator = world | kObserveFrames | kStopSimulation;
  switch (scope) {
    case Scope::Object: return object;
    case Scope::Model: return model;
    case Scope::World: return world;
    case Scope::Simulator: return simulator;
  }
  return 0;
}

ScopeHandle::ScopeHandle(Scope scope, std::string target, WorldState* world)
    : scope_(scope), target_(std::move(target)), caps_(capabilities_for(scope)), world_(world) {}

void ScopeHandle::require(std::uint32_t caps, const std::string& what) const {
  if (!allows(caps))
    throw Error(ErrorCode::ScopeViolation, to_string(scope_) + " plugin on '" + target_ + "' may not " + what);
}

Pose ScopeHandle::pose(const std::string& object) const {
  require(kReadPoses, "read poses");
  auto it = world_->poses.find(object);
  if (it == world_->poses.end()) throw Error(ErrorCode::InvalidArgument, "no object named '" + object + "'");
  return it->second;
}

void ScopeHandle::set_pose(const std::string& object, const Pose& pose) {
  auto it = world_->poses.find(object);
  if (it == world_->poses.end()) throw Error(ErrorCode::InvalidArgument, "no object named '" + object + "'");
  bool ok = allows(kMoveAny);
  if (!ok && scope_ == Scope::Object) ok = allows(kMoveSelf) && object == target_;
  if (!ok && scope_ == Scope::Model && world_->scene) {
    const ObjectSpec* o = world_->scene->find(object);
    ok = allows(kMoveModel) && o && o->model == target_;
  }
  if (!ok) require(kMoveAny, "move '" + object + "'");
  it->second = pose;
}

void ScopeHandle::set_gravity_enabled(bool on) {
  require(kSetGravity, "change gravity");
  world_->gravity_enabled = on;
}

bool ScopeHandle::gravity_enabled() const { return world_->gravity_enabled; }

const FrameBundle* ScopeHandle::latest_frame() const {
  require(kObserveFrames, "observe frames");
  return world_->latest_frame;
}

std::uint64_t ScopeHandle::tick() const { return world_->tick; }

void ScopeHandle::request_stop() {
  require(kStopSimulation, "stop the simulation");
  world_->stop_requested = true;
}

// ---------------------------------------------------------------- builtins

namespace {

double param(const PluginSpec& spec, const std::string& key, double fallback) {
  auto it = spec.params.find(key);
  if (it == spec.params.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "plugin '" + spec.name + "': param '" + key + "' is not a number");
  }
}

class GravityToggle : public Plugin {
 public:
  explicit GravityToggle(const PluginSpec& spec) : period_(static_cast<std::uint64_t>(param(spec, "period", 0))) {}
  void on_init(ScopeHandle& h, const SceneDescription&) override { h.set_gravity_enabled(!h.gravity_enabled()); }
  void on_physics_update(ScopeHandle& h, double) override {
    if (period_ > 0 && h.tick() % period_ == 0) h.set_gravity_enabled(!h.gravity_enabled());
  }

 private:
  std::uint64_t period_;
};

/// Translates an object at constant velocity; by default the plugin's own target.
class ObjectMover : public Plugin {
 public:
  explicit ObjectMover(const PluginSpec& spec)
      : velocity_(param(spec, "vx", 0), param(spec, "vy", 0), param(spec, "vz", 0)) {
    auto it = spec.params.find("object");
    object_ = it != spec.params.end() ? it->second : spec.target;
  }
  void on_physics_update(ScopeHandle& h, double dt) override {
    Pose p = h.pose(object_);
    p.position += velocity_ * dt;
    h.set_pose(object_, p);
  }

 private:
  Vec3 velocity_;
  std::string object_;
};

struct Registry {
  std::mutex mu;
  std::map<std::string, PluginFactory> factories;
};

Registry& registry() {
  static Registry r;
  static const bool seeded = [] {
    r.factories["gravity_toggle"] = [](const PluginSpec& s) { return std::make_unique<GravityToggle>(s); };
    r.factories["object_mover"] = [](const PluginSpec& s) { return std::make_unique<ObjectMover>(s); };
    r.factories["frame_observer"] = [](const PluginSpec&) { return std::make_unique<FrameObserver>(); };
    return true;
  }();
  (void)seeded;
  return r;
}

}  // namespace

void FrameObserver::on_graphics_update(ScopeHandle& h, double) {
  if (const FrameBundle* f = h.latest_frame()) {
    ++frames_seen;
    last_index = f->index;
  }
}

bool plugin_registered(const std::string& name) {
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  return r.factories.count(name) > 0;
}

void register_plugin_factory(const std::string& name, PluginFactory factory) {
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  r.factories[name] = std::move(factory);
}

std::vector<std::string> registered_plugins() {
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  std::vector<std::string> out;
  for (const auto& [name, _] : r.factories) out.push_back(name);
  return out;
}

std::unique_ptr<Plugin> create_plugin(const PluginSpec& spec) {
  PluginFactory f;
  {
    Registry& r = registry();
    std::lock_guard lock(r.mu);
    auto it = r.factories.find(spec.name);
    if (it == r.factories.end()) throw Error(ErrorCode::UnknownPlugin, "unknown plugin '" + spec.name + "'");
    f = it->second;
  }
  return f(spec);
}

// ---------------------------------------------------------------- host

PluginHost::~PluginHost() { shutdown(); }

template <typename F>
void PluginHost::guarded(Bound& b, F&& f) {
  if (!b.enabled) return;
  try {
    f();
  } catch (const std::exception& e) {
    b.enabled = false;
    errors_.push_back({b.spec.name, world_->tick, e.what()});
  }
}

ScopeHandle& PluginHost::register_plugin(const PluginSpec& spec) {
  if ((spec.scope == Scope::Object || spec.scope == Scope::Model) && spec.target.empty())
    throw Error(ErrorCode::InvalidScene, "plugin '" + spec.name + "' requires a target");
  if (world_->scene) {
    if (spec.scope == Scope::Object && !world_->scene->find(spec.target))
      throw Error(ErrorCode::InvalidScene, "plugin '" + spec.name + "' targets unknown object '" + spec.target + "'");
    if (spec.scope == Scope::Model && !world_->scene->find_model(spec.target))
      throw Error(ErrorCode::InvalidScene, "plugin '" + spec.name + "' targets unknown model '" + spec.target + "'");
  }
  Bound b;
  b.spec = spec;
  b.plugin = create_plugin(spec);
  b.handle = std::make_unique<ScopeHandle>(spec.scope, spec.target, world_);
  bound_.push_back(std::move(b));
  Bound& ref = bound_.back();
  static const SceneDescription kEmpty;
  const SceneDescription& scene = world_->scene ? *world_->scene : kEmpty;
  guarded(ref, [&] { ref.plugin->on_init(*ref.handle, scene); });
  return *ref.handle;
}

void PluginHost::physics_update(double dt) {
  for (auto& b : bound_) guarded(b, [&] { b.plugin->on_physics_update(*b.handle, dt); });
}

void PluginHost::graphics_update(double dt) {
  for (auto& b : bound_) guarded(b, [&] { b.plugin->on_graphics_update(*b.handle, dt); });
}

void PluginHost::shutdown() {
  if (shut_down_) return;
  shut_down_ = true;
  for (auto& b : bound_) guarded(b, [&] { b.plugin->on_shutdown(*b.handle); });
}

}  // namespace drillsim
