#include "doctest.h"
#include "test_util.hpp"

#include "drillsim/error.hpp"
#include "drillsim/simulation.hpp"

#include <thread>

using namespace drillsim;
using namespace testutil;

namespace {

SimConfig rate(double hz, int render_every) {
  SimConfig c;
  c.physics_hz = hz;
  c.render_every = render_every;
  return c;
}

constexpr int kN = 32;
constexpr double kH = 0.001;

VoxelVolume solid_block() {
  return block_volume({kN, kN, kN}, kH, {0, 0, 0}, {kN, kN, kN}, 1, centered_origin({kN, kN, kN}, kH));
}

SceneDescription sim_scene() {
  const Pose cam = look_at(Vec3(0.0, -0.03, 0.12), Vec3::Zero(), Vec3::UnitY());
  return tiny_scene(cam, Pose::from_position(Vec3(0, 0, 0.04)));
}

std::vector<TickRecord> run_records(const SceneDescription& scene, const Trajectory& traj, std::uint64_t ticks,
                                    SimConfig cfg, std::vector<FrameBundle>* frames = nullptr) {
  Simulation sim(scene, solid_block(), cfg);
  TrajectoryInput in(traj);
  std::vector<TickRecord> out;
  sim.run(
      in, ticks, [&](const TickRecord& r) { out.push_back(r); },
      [&](const FrameBundle& f) {
        if (frames) frames->push_back(f);
      });
  return out;
}

bool same_records(const TickRecord& a, const TickRecord& b) {
  return a.tick == b.tick && a.timestamp_ns == b.timestamp_ns && a.poses == b.poses && a.drill_input == b.drill_input &&
         a.drilling_enabled == b.drilling_enabled && a.force == b.force && a.contact == b.contact &&
         a.s_max == b.s_max && a.edit == b.edit && a.frame == b.frame;
}

/// Throws on its third physics update.
class Flaky : public Plugin {
 public:
  void on_physics_update(ScopeHandle&, double) override {
    if (++calls == 3) throw std::runtime_error("boom");
  }
  int calls = 0;
};

/// Records the dt values it sees.
class DtProbe : public Plugin {
 public:
  void on_physics_update(ScopeHandle&, double dt) override { physics.push_back(dt); }
  void on_graphics_update(ScopeHandle&, double dt) override { graphics.push_back(dt); }
  std::vector<double> physics, graphics;
};

}  // namespace

TEST_CASE("empty trajectory: one record per tick, a frame every k-th tick, no edits") {
  std::vector<FrameBundle> frames;
  SimConfig cfg;
  const auto recs = run_records(sim_scene(), Trajectory{}, 100, cfg, &frames);
  REQUIRE(recs.size() == 100);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(recs[i].tick == i + 1);
    CHECK(!recs[i].edit);
    CHECK(recs[i].timestamp_ns == (i + 1) * 1000000u);
  }
  REQUIRE(frames.size() == 3);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(frames[i].index == i + 1);
    CHECK(frames[i].tick == (i + 1) * 33);
    CHECK(recs[frames[i].tick - 1].frame == frames[i].index);
    CHECK(frames[i].timestamp_ns == recs[frames[i].tick - 1].timestamp_ns);
  }
}

TEST_CASE("run summary counts and render_every override") {
  Simulation sim(sim_scene(), solid_block(), rate(1000.0, 10));
  TrajectoryInput in(Trajectory{});
  const RunSummary s = sim.run(in, 45);
  CHECK(s.ticks == 45);
  CHECK(s.frames == 4);
  CHECK(s.edits == 0);
  CHECK(sim.tick() == 45);
  CHECK(sim.timestamp_ns(45) == 45000000u);
}

TEST_CASE("invalid loop configuration") {
  CHECK_THROWS_AS(Simulation(sim_scene(), solid_block(), rate(0.0, 33)), Error);
  CHECK_THROWS_AS(Simulation(sim_scene(), solid_block(), rate(1000.0, 0)), Error);
}

TEST_CASE("scene without camera or drill is rejected") {
  SceneDescription no_cam = sim_scene();
  no_cam.objects.erase("cam");
  try {
    Simulation sim(no_cam, solid_block(), {});
    FAIL("expected InvalidScene");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidScene);
  }
  SceneDescription no_drill = sim_scene();
  no_drill.objects.erase("drill");
  try {
    Simulation sim(no_drill, solid_block(), {});
    FAIL("expected InvalidScene");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidScene);
  }
}

TEST_CASE("tracked poses: rig halves first, then non-light objects by name") {
  Simulation sim(sim_scene(), solid_block(), rate(1000.0, 1));
  CHECK(sim.tracked_names() == std::vector<std::string>{"cam_left", "cam_right", "drill", "patient"});
  const TickRecord r = sim.step({});
  REQUIRE(r.poses.size() == 4);
  CHECK((r.poses[1].pose.position - r.poses[0].pose.position).norm() == doctest::Approx(0.01));
  CHECK(r.poses[2].pose.position.isApprox(Vec3(0, 0, 0.04)));
}

TEST_CASE("identical runs produce identical record streams") {
  Simulation probe(sim_scene(), solid_block(), {});
  TrajectoryContext ctx = probe.trajectory_context();
  const Trajectory traj = make_builtin_trajectory(BuiltinSetting::MovingDrill, 4, ctx);
  const std::uint64_t ticks = 4 * 33;
  std::vector<FrameBundle> fa, fb, fc;
  SimConfig one;
  SimConfig two;
  two.threads = 2;
  const auto a = run_records(sim_scene(), traj, ticks, one, &fa);
  const auto b = run_records(sim_scene(), traj, ticks, one, &fb);
  const auto c = run_records(sim_scene(), traj, ticks, two, &fc);
  REQUIRE(a.size() == ticks);
  REQUIRE(b.size() == ticks);
  REQUIRE(c.size() == ticks);
  std::size_t edits = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(same_records(a[i], b[i]));
    CHECK(same_records(a[i], c[i]));
    edits += a[i].edit ? 1 : 0;
  }
  CHECK(edits >= 1);
  REQUIRE(fa.size() == 4);
  REQUIRE(fb.size() == 4);
  REQUIRE(fc.size() == 4);
  for (std::size_t i = 0; i < fa.size(); ++i) {
    CHECK(fa[i].stereo.left == fb[i].stereo.left);
    CHECK(fa[i].stereo.right == fb[i].stereo.right);
    CHECK(fa[i].stereo.left == fc[i].stereo.left);
    CHECK(fa[i].stereo.right == fc[i].stereo.right);
  }
}

TEST_CASE("builtin trajectories") {
  Simulation probe(sim_scene(), solid_block(), {});
  const TrajectoryContext ctx = probe.trajectory_context();
  CHECK(ctx.target.isZero(1e-12));
  CHECK(ctx.extent.isApprox(Vec3::Constant(0.032)));

  SUBCASE("frames = 1 is a single sample at the first frame tick") {
    for (auto setting : {BuiltinSetting::MovingCamera, BuiltinSetting::MovingDrill}) {
      const Trajectory t = make_builtin_trajectory(setting, 1, ctx);
      REQUIRE(t.samples.size() == 1);
      CHECK(t.samples[0].t == doctest::Approx(0.033));
      CHECK_NOTHROW(t.validate());
    }
    CHECK_THROWS_AS(make_builtin_trajectory(BuiltinSetting::MovingCamera, 0, ctx), Error);
  }

  SUBCASE("moving_camera orbits with the drill parked") {
    const Trajectory t = make_builtin_trajectory(BuiltinSetting::MovingCamera, 20, ctx);
    REQUIRE(t.samples.size() == 20);
    const double r0 = (t.samples[0].camera_pose->position - ctx.target).head<2>().norm();
    for (const auto& s : t.samples) {
      CHECK(s.drill_pose == ctx.drill_home);
      CHECK(!*s.drilling_enabled);
      CHECK((s.camera_pose->position - ctx.target).head<2>().norm() == doctest::Approx(r0).epsilon(1e-9));
    }
    CHECK((t.samples.front().camera_pose->position - t.samples.back().camera_pose->position).norm() > 0.01);
  }

  SUBCASE("moving_drill keeps the camera fixed") {
    const Trajectory t = make_builtin_trajectory(BuiltinSetting::MovingDrill, 20, ctx);
    for (const auto& s : t.samples) {
      CHECK(s.camera_pose == ctx.camera_home);
      CHECK(*s.drilling_enabled);
    }
    // starts above the volume, plunges below its center
    CHECK(t.samples.front().drill_pose->position.z() > 0.016);
    double lowest = 1.0;
    for (const auto& s : t.samples) lowest = std::min(lowest, s.drill_pose->position.z());
    CHECK(lowest < 0.0);
  }

  SUBCASE("seed changes the jitter but not the sizing") {
    TrajectoryContext other = ctx;
    other.seed = 7;
    const Trajectory a = make_builtin_trajectory(BuiltinSetting::MovingDrill, 10, ctx);
    const Trajectory b = make_builtin_trajectory(BuiltinSetting::MovingDrill, 10, other);
    CHECK(a.samples.size() == b.samples.size());
    CHECK(!(a == b));
    CHECK(a == make_builtin_trajectory(BuiltinSetting::MovingDrill, 10, ctx));
  }
}

TEST_CASE("builtin settings run: camera motion has no edits, drill motion edits with a constant camera") {
  Simulation probe(sim_scene(), solid_block(), {});
  const TrajectoryContext ctx = probe.trajectory_context();

  std::vector<FrameBundle> frames;
  auto recs = run_records(sim_scene(), make_builtin_trajectory(BuiltinSetting::MovingCamera, 3, ctx), 99, {}, &frames);
  CHECK(frames.size() == 3);
  for (const auto& r : recs) CHECK(!r.edit);
  CHECK(!(frames.front().left_info.pose == frames.back().left_info.pose));

  frames.clear();
  recs = run_records(sim_scene(), make_builtin_trajectory(BuiltinSetting::MovingDrill, 3, ctx), 99, {}, &frames);
  REQUIRE(frames.size() == 3);
  std::size_t edits = 0;
  for (const auto& r : recs) edits += r.edit ? 1 : 0;
  CHECK(edits >= 1);
  for (const auto& f : frames) {
    CHECK(f.left_info.pose == frames.front().left_info.pose);
    CHECK(f.right_info.pose == frames.front().right_info.pose);
    CHECK(f.left_info.baseline == doctest::Approx(0.01));
  }
}

TEST_CASE("trajectory evaluation, validation and file round trip") {
  Trajectory t;
  TrajectorySample a, b, c;
  a.t = 0.0;
  a.drill_pose = Pose::from_position(Vec3(0, 0, 0));
  a.drilling_enabled = false;
  b.t = 1.0;
  b.drill_pose = Pose{Vec3(1, 0, 0), Quat(Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ()))};
  b.drilling_enabled = true;
  c.t = 2.0;
  c.camera_pose = Pose::from_position(Vec3(0, 0, 5));
  t.samples = {a, b, c};
  CHECK_NOTHROW(t.validate());

  const ControlState mid = t.evaluate(0.5);
  REQUIRE(mid.drill_pose);
  CHECK(mid.drill_pose->position.isApprox(Vec3(0.5, 0, 0)));
  CHECK(mid.drill_pose->orientation.angularDistance(Quat(Eigen::AngleAxisd(kPi / 4, Vec3::UnitZ()))) < 1e-9);
  CHECK(!mid.drilling_enabled);
  // channels hold outside their samples
  CHECK(mid.camera_pose->position.isApprox(Vec3(0, 0, 5)));
  CHECK(t.evaluate(5.0).drill_pose->position.isApprox(Vec3(1, 0, 0)));
  CHECK(t.evaluate(1.5).drilling_enabled);

  t.interpolation = Interpolation::Hold;
  CHECK(t.evaluate(0.9).drill_pose->position.isApprox(Vec3(0, 0, 0)));
  CHECK(t.evaluate(1.0).drill_pose->position.isApprox(Vec3(1, 0, 0)));

  TempDir dir("traj");
  write_trajectory(t, dir / "t.yaml");
  const Trajectory back = read_trajectory(dir / "t.yaml");
  REQUIRE(back.samples.size() == 3);
  CHECK(back.interpolation == Interpolation::Hold);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.samples[i].t == t.samples[i].t);
    CHECK(back.samples[i].drilling_enabled == t.samples[i].drilling_enabled);
    CHECK(back.samples[i].camera_pose.has_value() == t.samples[i].camera_pose.has_value());
    if (t.samples[i].drill_pose)
      CHECK(back.samples[i].drill_pose->position.isApprox(t.samples[i].drill_pose->position));
  }

  Trajectory bad = t;
  bad.samples[1].t = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("capability sets nest by scope") {
  const Scope order[] = {Scope::Object, Scope::Model, Scope::World, Scope::Simulator};
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      const std::uint32_t lo = capabilities_for(order[i]);
      const std::uint32_t hi = capabilities_for(order[j]);
      CHECK((lo & hi) == lo);
      // every capability of the lower scope is accepted at the higher one
      WorldState w;
      ScopeHandle h(order[j], "x", &w);
      CHECK(h.allows(lo));
    }
  CHECK(capabilities_for(Scope::Object) != capabilities_for(Scope::Simulator));
}

TEST_CASE("scope handles enforce the capability matrix") {
  const SceneDescription scene = sim_scene();
  WorldState w;
  w.scene = &scene;
  for (const auto& [name, _] : scene.objects) w.poses[name] = scene.world_pose(name);
  const Pose moved = Pose::from_position(Vec3(1, 2, 3));

  auto violation = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code() == ErrorCode::ScopeViolation;
    }
    return false;
  };

  ScopeHandle object(Scope::Object, "drill", &w);
  CHECK_NOTHROW(object.set_pose("drill", moved));
  CHECK(violation([&] { object.set_pose("cam", moved); }));
  CHECK(violation([&] { object.set_gravity_enabled(false); }));
  CHECK(violation([&] { object.latest_frame(); }));
  CHECK(violation([&] { object.request_stop(); }));
  CHECK(object.pose("cam") == w.poses["cam"]);

  ScopeHandle model(Scope::Model, "drill", &w);
  CHECK_NOTHROW(model.set_pose("drill", moved));
  CHECK(violation([&] { model.set_pose("patient", moved); }));

  ScopeHandle world(Scope::World, "", &w);
  CHECK_NOTHROW(world.set_pose("cam", moved));
  CHECK_NOTHROW(world.set_gravity_enabled(false));
  CHECK(!w.gravity_enabled);
  CHECK(violation([&] { world.request_stop(); }));

  ScopeHandle sim(Scope::Simulator, "", &w);
  CHECK_NOTHROW(sim.latest_frame());
  CHECK_NOTHROW(sim.request_stop());
  CHECK(w.stop_requested);
}

TEST_CASE("plugins in a running simulation") {
  SceneDescription scene = sim_scene();
  scene.plugins.push_back({"gravity_toggle", Scope::World, "", {}});
  scene.plugins.push_back({"frame_observer", Scope::Simulator, "", {}});
  // object-scope plugin trying to move another object
  scene.plugins.push_back({"object_mover", Scope::Object, "drill", {{"object", "cam"}, {"vx", "1"}}});
  // world-scope mover of the camera is allowed
  scene.plugins.push_back({"object_mover", Scope::World, "", {{"object", "cam"}, {"vy", "0.5"}}});

  Simulation sim(scene, solid_block(), rate(1000.0, 10));
  REQUIRE(sim.plugins().size() == 4);
  TrajectoryInput in(Trajectory{});
  const RunSummary s = sim.run(in, 30);
  CHECK(s.ticks == 30);

  // the gravity toggle ran at init
  CHECK(sim.plugins().enabled(0));
  auto& observer = dynamic_cast<FrameObserver&>(sim.plugins().plugin(1));
  CHECK(observer.frames_seen == 3);
  CHECK(observer.last_index == 3);

  CHECK(!sim.plugins().enabled(2));
  REQUIRE(s.plugin_errors.size() == 1);
  CHECK(s.plugin_errors[0].plugin == "object_mover");
  CHECK(s.plugin_errors[0].tick == 1);
  CHECK(s.plugin_errors[0].message.find("ScopeViolation") != std::string::npos);

  CHECK(sim.plugins().enabled(3));
  // 30 ticks at 0.5 m/s
  CHECK(sim.rig().left.pose.position.y() - (-0.03) == doctest::Approx(0.015).epsilon(1e-6));
}

TEST_CASE("unknown plugin or bad target fails registration") {
  SceneDescription scene = sim_scene();
  scene.plugins.push_back({"no_such_plugin", Scope::World, "", {}});
  try {
    Simulation sim(scene, solid_block(), {});
    FAIL("expected UnknownPlugin");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownPlugin);
  }
  scene.plugins.back() = {"object_mover", Scope::Object, "ghost", {}};
  try {
    Simulation sim(scene, solid_block(), {});
    FAIL("expected InvalidScene");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidScene);
  }
}

TEST_CASE("a failing plugin is disabled and the loop continues") {
  register_plugin_factory("test_flaky", [](const PluginSpec&) { return std::make_unique<Flaky>(); });
  register_plugin_factory("test_dt", [](const PluginSpec&) { return std::make_unique<DtProbe>(); });
  CHECK(plugin_registered("test_flaky"));
  SceneDescription scene = sim_scene();
  scene.plugins.push_back({"test_flaky", Scope::Simulator, "", {}});
  scene.plugins.push_back({"test_dt", Scope::Simulator, "", {}});
  Simulation sim(scene, solid_block(), rate(500.0, 4));
  TrajectoryInput in(Trajectory{});
  const RunSummary s = sim.run(in, 12);
  CHECK(s.ticks == 12);
  REQUIRE(s.plugin_errors.size() == 1);
  CHECK(s.plugin_errors[0].plugin == "test_flaky");
  CHECK(s.plugin_errors[0].tick == 3);
  CHECK(dynamic_cast<Flaky&>(sim.plugins().plugin(0)).calls == 3);
  auto& probe = dynamic_cast<DtProbe&>(sim.plugins().plugin(1));
  CHECK(probe.physics.size() == 12);
  for (double dt : probe.physics) CHECK(dt == 1.0 / 500.0);
  CHECK(probe.graphics.size() == 3);
  for (double dt : probe.graphics) CHECK(dt == doctest::Approx(4.0 / 500.0));
}

TEST_CASE("simulator plugin can stop the loop") {
  struct Stopper : Plugin {
    void on_physics_update(ScopeHandle& h, double) override {
      if (h.tick() == 7) h.request_stop();
    }
  };
  register_plugin_factory("test_stopper", [](const PluginSpec&) { return std::make_unique<Stopper>(); });
  SceneDescription scene = sim_scene();
  scene.plugins.push_back({"test_stopper", Scope::Simulator, "", {}});
  Simulation sim(scene, solid_block(), {});
  TrajectoryInput in(Trajectory{});
  CHECK(sim.run(in, 100).ticks == 7);
}

TEST_CASE("control latch holds the last value and ends the run when closed") {
  ControlLatch latch;
  ControlState s;
  CHECK(latch.poll(1, 0.001, s));
  CHECK(!s.drill_pose);

  const Pose p = Pose::from_position(Vec3(0, 0, 0.03));
  latch.set_drill(p, true);
  for (int i = 0; i < 5; ++i) {
    ControlState got;
    CHECK(latch.poll(2 + i, 0.0, got));
    REQUIRE(got.drill_pose);
    CHECK(*got.drill_pose == p);
    CHECK(got.drilling_enabled);
  }
  CHECK(latch.updates() == 1);

  Simulation sim(sim_scene(), solid_block(), {});
  std::thread writer([&] {
    for (int i = 0; i < 50; ++i) latch.set_drill(Pose::from_position(Vec3(0, 0, 0.03 + 1e-4 * i)), false);
    latch.close();
  });
  writer.join();
  const RunSummary r = sim.run(latch, 1000);
  CHECK(r.input_closed);
  CHECK(r.ticks == 0);

  ControlLatch open;
  open.set_drill(Pose::from_position(Vec3(0, 0, 0.025)), false);
  Simulation sim2(sim_scene(), solid_block(), {});
  std::vector<TickRecord> recs;
  sim2.run(open, 20, [&](const TickRecord& rr) { recs.push_back(rr); });
  REQUIRE(recs.size() == 20);
  // no further messages: the goal stays latched
  for (const auto& rr : recs) CHECK(rr.drill_input.position.isApprox(Vec3(0, 0, 0.025)));
}
