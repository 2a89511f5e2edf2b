#include "drillsim/simulation.hpp"

#include "drillsim/error.hpp"

#include <algorithm>
#include <cmath>

namespace drillsim {

bool TrajectoryInput::poll(std::uint64_t, double t, ControlState& latched) {
  latched = traj_.evaluate(t);
  return true;
}

void ControlLatch::set_drill(const Pose& pose, bool drilling) {
  std::lock_guard lock(mu_);
  state_.drill_pose = pose.normalized();
  state_.drilling_enabled = drilling;
  ++updates_;
}

void ControlLatch::set_camera(const Pose& pose) {
  std::lock_guard lock(mu_);
  state_.camera_pose = pose.normalized();
  ++updates_;
}

void ControlLatch::close() { closed_ = true; }

bool ControlLatch::poll(std::uint64_t, double, ControlState& latched) {
  if (closed_) return false;
  std::lock_guard lock(mu_);
  latched = state_;
  return true;
}

namespace {

std::optional<std::uint8_t> style_label(const SceneDescription& scene, const std::string& name) {
  auto it = scene.styles.find(name);
  if (it == scene.styles.end()) return std::nullopt;
  auto p = it->second.params.find("label");
  if (p == it->second.params.end()) return std::nullopt;
  int v = -1;
  try {
    v = std::stoi(p->second);
  } catch (const std::exception&) {
  }
  if (v < 0 || v > 255) throw Error(ErrorCode::InvalidScene, "object '" + name + "' has an invalid style label");
  return static_cast<std::uint8_t>(v);
}

std::string pick_target(const SceneDescription& scene, const std::string& channel, ObjectKind kind,
                        bool need_drill) {
  for (const auto& d : scene.input_devices)
    if (d.channel == channel && scene.find(d.target)) return d.target;
  for (const auto& [name, o] : scene.objects) {
    if (need_drill ? o.drill.has_value() : o.kind == kind) return name;
  }
  return {};
}

}  // namespace

Simulation::Simulation(const SceneDescription& scene, SimConfig config) : scene_(scene), config_(config) {
  for (const auto& [name, o] : scene_.objects) {
    if (o.kind == ObjectKind::Volume && o.volume) {
      volume_name_ = name;
      volume_ = load_volume(*o.volume);
      volume_.set_origin(scene_.world_pose(name) * o.volume->origin);
      break;
    }
  }
  init();
}

Simulation::Simulation(const SceneDescription& scene, VoxelVolume volume, SimConfig config)
    : scene_(scene), config_(config), volume_(std::move(volume)) {
  for (const auto& [name, o] : scene_.objects)
    if (o.kind == ObjectKind::Volume) {
      volume_name_ = name;
      break;
    }
  init();
}

Simulation::~Simulation() {
  if (host_) host_->shutdown();
}

void Simulation::init() {
  if (!(config_.physics_hz > 0.0) || config_.render_every < 1)
    throw Error(ErrorCode::InvalidArgument, "physics_hz must be > 0 and render_every >= 1");
  rig_name_ = pick_target(scene_, "control_camera", ObjectKind::Camera, false);
  if (rig_name_.empty() || !scene_.object(rig_name_).camera)
    throw Error(ErrorCode::InvalidScene, "scene has no camera");
  drill_name_ = pick_target(scene_, "control_drill", ObjectKind::RigidBody, true);
  if (drill_name_.empty()) throw Error(ErrorCode::InvalidScene, "scene has no drill");

  const CameraSpec& cam = *scene_.object(rig_name_).camera;
  frustum_ = cam.frustum;
  if (config_.width) frustum_.width = *config_.width;
  if (config_.height) frustum_.height = *config_.height;
  frustum_.validate();
  baseline_ = config_.baseline.value_or(cam.baseline);
  if (baseline_ < 0.0) throw Error(ErrorCode::InvalidArgument, "baseline must be >= 0");

  const ObjectSpec& drill = scene_.object(drill_name_);
  drill_config_ = drill.drill.value_or(DrillConfig{});

  world_.scene = &scene_;
  world_.gravity = scene_.gravity;
  for (const auto& [name, _] : scene_.objects) world_.poses[name] = scene_.world_pose(name);
  drill_ = DrillState::make(drill_config_, world_.poses[drill_name_]);
  rig_ = build_stereo_rig(world_.poses[rig_name_], frustum_, baseline_);

  host_ = std::make_unique<PluginHost>(&world_);
  for (const auto& p : scene_.plugins) host_->register_plugin(p);
}

std::uint64_t Simulation::timestamp_ns(std::uint64_t tick) const {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(tick) * 1e9 / config_.physics_hz));
}

TrajectoryContext Simulation::trajectory_context() const {
  TrajectoryContext ctx;
  const Vec3 half = 0.5 * volume_.extent();
  ctx.target = volume_.world_from_local(half);
  ctx.extent = volume_.extent();
  ctx.camera_home = world_.poses.at(rig_name_);
  ctx.drill_home = world_.poses.at(drill_name_);
  ctx.render_every = config_.render_every;
  ctx.physics_hz = config_.physics_hz;
  ctx.seed = config_.seed;
  return ctx;
}

std::vector<std::string> Simulation::tracked_names() const {
  std::vector<std::string> names{rig_name_ + "_left", rig_name_ + "_right"};
  for (const auto& [name, o] : scene_.objects)
    if (name != rig_name_ && o.kind != ObjectKind::Light) names.push_back(name);
  return names;
}

std::vector<NamedPose> Simulation::tracked_poses() const {
  std::vector<NamedPose> out{{rig_name_ + "_left", rig_.left.pose}, {rig_name_ + "_right", rig_.right.pose}};
  for (const auto& [name, o] : scene_.objects)
    if (name != rig_name_ && o.kind != ObjectKind::Light) out.push_back({name, world_.poses.at(name)});
  return out;
}

RenderScene Simulation::render_scene() const {
  RenderScene rs;
  if (!volume_name_.empty()) rs.volume = &volume_;
  for (const auto& [name, o] : scene_.objects) {
    if (o.kind == ObjectKind::Light && o.light) {
      rs.light_direction = world_.poses.at(name).rotate(o.light->direction).normalized();
      rs.ambient = o.light->ambient;
      break;
    }
  }
  for (const auto& [name, o] : scene_.objects) {
    const auto label = [&] { return style_label(scene_, name); };
    if (name == drill_name_) {
      const Pose& p = drill_.pose;
      const Vec3 axis = p.rotate(drill_config_.shaft_axis.normalized());
      const Rgb8 color = o.body ? o.body->color : Rgb8{180, 180, 190};
      rs.bodies.push_back({name, BodyShape::Sphere, p.position, p.position, drill_config_.tip_radius, color, label()});
      rs.bodies.push_back({name, BodyShape::Capsule, p.position + axis * drill_config_.tip_radius,
                           p.position + axis * drill_config_.render_length, drill_config_.shaft_radius, color, label()});
      continue;
    }
    if (!o.body) continue;
    const Pose& p = world_.poses.at(name);
    RenderBody b{name, o.body->shape, p.position, p.position, o.body->radius, o.body->color, label()};
    if (b.shape == BodyShape::Capsule) b.b = p.transform(Vec3(0, 0, o.body->length));
    rs.bodies.push_back(b);
  }
  return rs;
}

FrameBundle Simulation::render_now(std::uint64_t index) const {
  RenderOptions opts;
  opts.threads = config_.threads;
  opts.kernels = config_.kernels;
  FrameBundle f;
  f.index = index;
  f.tick = world_.tick;
  f.timestamp_ns = timestamp_ns(world_.tick);
  f.stereo = render_stereo(render_scene(), rig_, opts);
  const auto normalized = depth_linearize_pass(f.stereo.left, frustum_, opts);
  f.depth = metric_depth(normalized, frustum_, opts);
  f.cloud = assemble_point_cloud(f.stereo.left, normalized, frustum_, opts);
  f.left_info = {rig_name_ + "_left", frustum_, intrinsics(frustum_), baseline_, rig_.left.pose};
  f.right_info = {rig_name_ + "_right", frustum_, intrinsics(frustum_), baseline_, rig_.right.pose};
  f.poses = tracked_poses();
  return f;
}

TickRecord Simulation::step(const ControlState& control, const FrameSink& on_frame) {
  const std::uint64_t tick = ++world_.tick;
  const double dt = 1.0 / config_.physics_hz;

  if (control.camera_pose) world_.poses[rig_name_] = *control.camera_pose;
  const Pose input = control.drill_pose.value_or(world_.poses[drill_name_]);
  drill_.drilling_enabled = control.drilling_enabled;
  const ProxyResult pr = update_proxies(input, volume_, drill_, drill_config_);
  DrillResolution res = resolve_drill(drill_, pr, volume_, drill_config_, tick);
  world_.poses[drill_name_] = res.pose;

  host_->physics_update(dt);
  // plugins may have moved the camera; the drill stays haptics-owned
  rig_ = build_stereo_rig(world_.poses[rig_name_], frustum_, baseline_);
  world_.poses[drill_name_] = drill_.pose;

  TickRecord rec;
  rec.tick = tick;
  rec.timestamp_ns = timestamp_ns(tick);
  rec.drill_input = drill_.input_pose;
  rec.drilling_enabled = drill_.drilling_enabled;
  rec.force = res.force;
  rec.contact = pr.contact;
  rec.s_max = pr.s_max;
  if (res.edit && !res.edit->empty()) rec.edit = std::move(res.edit);

  if (tick % static_cast<std::uint64_t>(config_.render_every) == 0) {
    last_frame_ = render_now(++frames_);
    world_.latest_frame = &*last_frame_;
    host_->graphics_update(dt * config_.render_every);
    rec.frame = frames_;
    if (on_frame) on_frame(*last_frame_);
  }
  rec.poses = tracked_poses();
  return rec;
}

RunSummary Simulation::run(InputSource& input, std::uint64_t max_ticks, const TickSink& on_tick,
                           const FrameSink& on_frame) {
  RunSummary s;
  ControlState latched;
  const std::size_t errors_before = host_->errors().size();
  while (s.ticks < max_ticks) {
    const std::uint64_t next = world_.tick + 1;
    if (!input.poll(next, static_cast<double>(next) / config_.physics_hz, latched)) {
      s.input_closed = true;
      break;
    }
    const TickRecord rec = step(latched, on_frame);
    ++s.ticks;
    if (rec.frame) ++s.frames;
    if (rec.edit) {
      ++s.edits;
      s.removed_voxels += rec.edit->removed.size();
    }
    if (on_tick) on_tick(rec);
    if (world_.stop_requested) break;
  }
  s.plugin_errors.assign(host_->errors().begin() + static_cast<std::ptrdiff_t>(errors_before), host_->errors().end());
  return s;
}

}  // namespace drillsim
