// drillsim command-line driver: run / serve / convert / replay / eval / phantom.

#include "drillsim/convert.hpp"
#include "drillsim/error.hpp"
#include "drillsim/eval.hpp"
#include "drillsim/phantom.hpp"
#include "drillsim/recording.hpp"
#include "drillsim/scene.hpp"
#include "drillsim/server.hpp"
#include "drillsim/session.hpp"
#include "drillsim/simulation.hpp"
#include "drillsim/trajectory.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <regex>

namespace fs = std::filesystem;
using namespace drillsim;

namespace {

constexpr int kSceneError = 1;
constexpr int kRuntimeError = 2;

std::atomic<bool> g_interrupt{false};

extern "C" void on_signal(int) { g_interrupt = true; }

void install_signals() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGPIPE, SIG_IGN);
}

/// Thrown for bad flag combinations; exits like a usage error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunFlags {
  std::string launch;
  std::string trajectory;
  std::optional<int> frames;
  std::string record;
  bool force = false;
  std::string serve;
  std::optional<double> baseline;
  std::string size;
  std::uint64_t seed = 0;
  int render_every = 33;
  int threads = 1;
  std::optional<double> publish_hz;
  bool physics_rate_poses = false;
};

std::pair<int, int> parse_size(const std::string& s) {
  static const std::regex re(R"((\d+)[xX](\d+))");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw UsageError("--size expects WxH, got '" + s + "'");
  const int w = std::stoi(m[1].str()), h = std::stoi(m[2].str());
  if (w < 1 || h < 1 || w > 16384 || h > 16384) throw UsageError("--size out of range: " + s);
  return {w, h};
}

void check_output(const std::string& path, bool force) {
  if (path.empty()) return;
  if (fs::exists(path) && !force) throw UsageError(path + " exists; pass --force to overwrite");
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) throw UsageError("directory " + parent.string() + " does not exist");
}

void print_diagnostics(const SceneDescription& scene, const std::vector<Diagnostic>& diags) {
  for (const auto& w : scene.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& d : diags)
    std::cerr << (d.severity == Diagnostic::Severity::Error ? "error: " : "warning: ")
              << (d.object.empty() ? "" : d.object + ": ") << d.message << "\n";
}

int cmd_run(const RunFlags& f) {
  // flags first: nothing is read or written until they are consistent
  if (f.trajectory.empty() && f.serve.empty()) throw UsageError("run needs --trajectory or --serve");
  if (f.frames && *f.frames < 1) throw UsageError("--frames must be >= 1");
  if (f.render_every < 1) throw UsageError("--render-every must be >= 1");
  if (f.threads < 1) throw UsageError("--threads must be >= 1");
  if (f.baseline && !(*f.baseline > 0.0)) throw UsageError("--baseline must be positive");
  if (f.publish_hz && !(*f.publish_hz > 0.0)) throw UsageError("--publish-hz must be positive");
  std::optional<std::pair<int, int>> size;
  if (!f.size.empty()) size = parse_size(f.size);
  const auto builtin = parse_builtin_setting(f.trajectory);
  if (!f.trajectory.empty() && !builtin && !fs::is_regular_file(f.trajectory))
    throw UsageError("--trajectory must be moving_camera, moving_drill or an existing file");
  check_output(f.record, f.force);
  std::optional<Endpoint> endpoint;
  if (!f.serve.empty()) {
    try {
      endpoint = parse_endpoint(f.serve);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }

  SimConfig cfg;
  cfg.render_every = f.render_every;
  cfg.threads = f.threads;
  cfg.seed = f.seed;
  cfg.baseline = f.baseline;
  if (size) {
    cfg.width = size->first;
    cfg.height = size->second;
  }

  std::unique_ptr<Simulation> sim;
  try {
    const SceneDescription scene = load_scene(fs::path(f.launch));
    const auto diags = validate_scene(scene);
    print_diagnostics(scene, diags);
    for (const auto& d : diags)
      if (d.severity == Diagnostic::Severity::Error) return kSceneError;
    sim = std::make_unique<Simulation>(scene, cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSceneError;
  }

  std::unique_ptr<StreamServer> server;
  ControlLatch latch;
  if (endpoint) {
    server = std::make_unique<StreamServer>(f.serve);
    server->set_control_handler([&latch](const Message& m) {
      if (m.topic == Topic::ControlDrill) {
        const DrillControl c = decode_drill_control(m);
        latch.set_drill(c.pose, c.drilling_enabled);
      } else if (m.topic == Topic::ControlCamera) {
        latch.set_camera(decode_camera_control(m).pose);
      }
    });
    server->start();
    std::cout << "serving on " << server->host() << ":" << server->port() << std::endl;
  }

  const std::uint64_t k = static_cast<std::uint64_t>(cfg.render_every);
  std::unique_ptr<InputSource> scripted;
  std::uint64_t max_ticks = std::numeric_limits<std::uint64_t>::max();
  if (builtin) {
    const int frames = f.frames.value_or(500);
    scripted = std::make_unique<TrajectoryInput>(make_builtin_trajectory(*builtin, frames, sim->trajectory_context()));
    max_ticks = static_cast<std::uint64_t>(frames) * k;
  } else if (!f.trajectory.empty()) {
    Trajectory traj = read_trajectory(f.trajectory);
    const double end = traj.samples.empty() ? 0.0 : traj.samples.back().t;
    const auto ticks = static_cast<std::uint64_t>(std::floor(end * cfg.physics_hz + 1e-9));
    const std::uint64_t frames = f.frames ? static_cast<std::uint64_t>(*f.frames) : std::max<std::uint64_t>(1, ticks / k);
    scripted = std::make_unique<TrajectoryInput>(std::move(traj));
    max_ticks = frames * k;
  } else if (f.frames) {
    max_ticks = static_cast<std::uint64_t>(*f.frames) * k;
  }

  SessionOptions so;
  if (!f.record.empty()) so.record = f.record;
  so.overwrite = f.force;
  so.publish_hz = f.publish_hz;
  so.physics_rate_poses = f.physics_rate_poses;
  so.realtime = static_cast<bool>(server);
  so.interrupt = &g_interrupt;
  so.trajectory_name = f.trajectory.empty() ? "live" : f.trajectory;
  so.server = server.get();
  if (server && scripted) std::cerr << "note: scripted trajectory drives the loop; controller input is ignored\n";

  InputSource& input = scripted ? *scripted : static_cast<InputSource&>(latch);
  const SessionResult r = run_session(*sim, input, max_ticks, so);
  if (server) server->stop();

  for (const auto& e : r.summary.plugin_errors)
    std::cerr << "warning: plugin " << e.plugin << " disabled at tick " << e.tick << ": " << e.message << "\n";
  std::printf("frames %llu ticks %llu edits %llu removed %llu messages %llu", static_cast<unsigned long long>(r.summary.frames),
              static_cast<unsigned long long>(r.summary.ticks), static_cast<unsigned long long>(r.summary.edits),
              static_cast<unsigned long long>(r.summary.removed_voxels), static_cast<unsigned long long>(r.messages));
  if (so.record) std::printf(" recorded %llu bytes to %s", static_cast<unsigned long long>(r.recorded_bytes), f.record.c_str());
  std::printf("%s\n", r.interrupted ? " (interrupted)" : "");
  return 0;
}

struct ConvertFlags {
  std::string input;
  std::string output;
  std::optional<double> spacing;
  std::string prefix = "slice_";
  bool force = false;
};

int cmd_convert(const ConvertFlags& f) {
  check_output(f.output, f.force);
  if (f.spacing && !(*f.spacing > 0.0)) throw UsageError("--spacing must be positive");
  ConvertOptions o;
  o.prefix = f.prefix;
  if (f.spacing) o.spacing = Vec3::Constant(*f.spacing);
  try {
    const fs::path in(f.input);
    VolumeSource src;
    if (fs::is_directory(in)) {
      src = convert_stack(in, f.output, o);
    } else {
      if (f.spacing) std::cerr << "note: --spacing is ignored for NRRD input\n";
      src = convert_nrrd(in, f.output, o);
    }
    std::printf("wrote %s (%d slices in %s, %zu labels)\n", f.output.c_str(), src.count, src.directory.c_str(),
                src.label_map.size());
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::Io:
        return kRuntimeError;
      default:
        return kSceneError;
    }
  }
  return 0;
}

struct ReplayFlags {
  std::string input;
  double speed = 1.0;
  std::string record;
  bool force = false;
  std::string serve;
  int wait = 1;
};

int cmd_replay(const ReplayFlags& f) {
  if (f.speed < 0.0) throw UsageError("--speed must be >= 0");
  if (f.wait < 0) throw UsageError("--wait must be >= 0");
  check_output(f.record, f.force);
  if (!f.record.empty() && fs::exists(f.input) && fs::exists(f.record) && fs::equivalent(f.input, f.record))
    throw UsageError("cannot replay into the file being read");

  std::unique_ptr<StreamServer> server;
  if (!f.serve.empty()) {
    server = std::make_unique<StreamServer>(f.serve);
    server->start();
    std::cout << "serving on " << server->host() << ":" << server->port() << std::endl;
    while (!g_interrupt && !server->wait_for_subscribers(static_cast<std::size_t>(f.wait), std::chrono::milliseconds(200))) {
    }
  }
  std::optional<RecordingWriter> writer;
  std::map<std::string, std::uint64_t> counts;
  ReplayResult res;
  try {
    RecordingReader probe(f.input);
    if (!f.record.empty()) writer.emplace(f.record, probe.header(), f.force);
    res = replay(f.input, f.speed, [&](const Message& m) {
      if (writer) writer->write(m);
      if (server) server->publish(m);
      ++counts[topic_name(m.topic)];
    });
    if (writer) writer->close();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  if (server) server->stop();
  std::printf("replayed %llu messages\n", static_cast<unsigned long long>(res.messages));
  for (const auto& [name, n] : counts) std::printf("  %-14s %llu\n", name.c_str(), static_cast<unsigned long long>(n));
  if (res.truncated) {
    std::cerr << "error: " << f.input << " is truncated; replayed the valid prefix\n";
    return kRuntimeError;
  }
  return 0;
}

struct EvalFlags {
  std::string recording;
  std::string estimates;
  std::string mode = "pose";
  std::string align = "none";
  std::string object = "camera_left";
  std::string summary;
  bool force = false;
};

int cmd_eval(const EvalFlags& f) {
  check_output(f.summary, f.force);
  try {
    std::string json;
    if (f.mode == "pose") {
      const Alignment a = f.align == "first_frame" ? Alignment::FirstFrame : Alignment::None;
      const auto gt = recorded_trajectory(f.recording, f.object);
      const ErrorReport r = pose_error(gt, read_estimates(f.estimates), a);
      std::cout << format_report(r);
      json = report_json(r);
    } else {
      const DepthReport r = depth_error(recorded_depth(f.recording), read_depth_estimates(f.estimates));
      std::cout << format_depth_report(r);
      json = depth_report_json(r);
    }
    if (!f.summary.empty()) {
      std::ofstream out(f.summary);
      out << json << "\n";
      if (!out) throw Error(ErrorCode::Io, "cannot write " + f.summary);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::Io ? kRuntimeError : kSceneError;
  }
  return 0;
}

struct PhantomFlags {
  std::string dir;
  int size = 256;
  double spacing = 0.0005;
  std::uint64_t seed = 0;
  bool force = false;
};

int cmd_phantom(const PhantomFlags& f) {
  if (f.size < 8 || f.size > 1024) throw UsageError("--size must be in [8, 1024]");
  if (!(f.spacing > 0.0)) throw UsageError("--spacing must be positive");
  if (fs::exists(fs::path(f.dir) / "launch.yaml") && !f.force)
    throw UsageError(f.dir + " already holds a scene; pass --force to overwrite");
  const fs::path launch = write_phantom_scene(f.dir, {f.size, f.spacing, f.seed});
  std::printf("wrote %s\n", launch.c_str());
  return 0;
}

void add_run_flags(CLI::App* cmd, RunFlags& f, bool serve) {
  cmd->add_option("launch", f.launch, "Launch file")->required();
  if (serve) {
    f.serve = "127.0.0.1:9090";
    cmd->add_option("address", f.serve, "Bind address host:port")->capture_default_str();
  }
  cmd->add_option("--trajectory", f.trajectory, "moving_camera, moving_drill or a trajectory file");
  cmd->add_option("--frames", f.frames, "Number of frames to render (default 500 for builtin trajectories)");
  cmd->add_option("--record", f.record, "Write a recording to PATH");
  cmd->add_flag("--force", f.force, "Overwrite an existing recording");
  if (!serve) cmd->add_option("--serve", f.serve, "Serve live on host:port");
  cmd->add_option("--baseline", f.baseline, "Stereo baseline in meters (default from scene, 0.065)");
  cmd->add_option("--size", f.size, "Image size WxH (default from scene, 640x480)");
  cmd->add_option("--seed", f.seed, "Seed for scripted trajectories")->capture_default_str();
  cmd->add_option("--render-every", f.render_every, "Physics ticks per rendered frame")->capture_default_str();
  cmd->add_option("--threads", f.threads, "Renderer threads")->capture_default_str();
  cmd->add_option("--publish-hz", f.publish_hz, "Publish frame topics at this rate (default every frame)");
  cmd->add_flag("--physics-rate-poses", f.physics_rate_poses, "Also publish poses on every physics tick");
}

}  // namespace

int main(int argc, char** argv) {
  install_signals();
  CLI::App app{"Volumetric drilling simulator and synthetic data generator", "drillsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "drillsim 1.0");

  RunFlags run, serve;
  add_run_flags(app.add_subcommand("run", "Run a scene with a scripted trajectory or live control"), run, false);
  add_run_flags(app.add_subcommand("serve", "Run a scene under live control (same as run --serve)"), serve, true);

  ConvertFlags conv;
  auto* c = app.add_subcommand("convert", "Convert an NRRD label volume or a slice directory into a volume descriptor");
  c->add_option("input", conv.input, "NRRD file or slice directory")->required()->check(CLI::ExistingPath);
  c->add_option("output", conv.output, "Descriptor to write (.yaml)")->required();
  c->add_option("--spacing", conv.spacing, "Voxel spacing in meters (slice directories only)");
  c->add_option("--prefix", conv.prefix, "Slice file name prefix")->capture_default_str();
  c->add_flag("--force", conv.force, "Overwrite an existing descriptor");

  ReplayFlags rep;
  auto* r = app.add_subcommand("replay", "Replay a recording");
  r->add_option("recording", rep.input, "Recording file")->required()->check(CLI::ExistingFile);
  r->add_option("--speed", rep.speed, "Playback speed; 0 replays as fast as possible")->capture_default_str();
  r->add_option("--record", rep.record, "Re-record the replayed stream to PATH");
  r->add_flag("--force", rep.force, "Overwrite an existing output");
  r->add_option("--serve", rep.serve, "Serve the replay on host:port");
  r->add_option("--wait", rep.wait, "Subscribers to wait for before replaying when serving")->capture_default_str();

  EvalFlags ev;
  auto* e = app.add_subcommand("eval", "Evaluate pose or depth estimates against a recording");
  e->add_option("recording", ev.recording, "Ground-truth recording")->required()->check(CLI::ExistingFile);
  e->add_option("estimates", ev.estimates, "Pose text file, or depth recording / .pfm file / .pfm directory")
      ->required()
      ->check(CLI::ExistingPath);
  e->add_option("--mode", ev.mode, "pose or depth")->check(CLI::IsMember({"pose", "depth"}))->capture_default_str();
  e->add_option("--align", ev.align, "none or first_frame")->check(CLI::IsMember({"none", "first_frame"}))->capture_default_str();
  e->add_option("--object", ev.object, "Ground-truth pose name")->capture_default_str();
  e->add_option("--summary", ev.summary, "Write a JSON summary to PATH");
  e->add_flag("--force", ev.force, "Overwrite an existing summary");

  PhantomFlags ph;
  auto* p = app.add_subcommand("phantom", "Write the synthetic temporal-bone phantom scene");
  p->add_option("dir", ph.dir, "Output directory")->required();
  p->add_option("--size", ph.size, "Voxels per axis")->capture_default_str();
  p->add_option("--spacing", ph.spacing, "Voxel spacing in meters")->capture_default_str();
  p->add_option("--seed", ph.seed, "Seed for the air cells")->capture_default_str();
  p->add_flag("--force", ph.force, "Overwrite an existing scene");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kRuntimeError;
  }

  try {
    if (app.got_subcommand("run")) return cmd_run(run);
    if (app.got_subcommand("serve")) return cmd_run(serve);
    if (app.got_subcommand("convert")) return cmd_convert(conv);
    if (app.got_subcommand("replay")) return cmd_replay(rep);
    if (app.got_subcommand("eval")) return cmd_eval(ev);
    if (app.got_subcommand("phantom")) return cmd_phantom(ph);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kRuntimeError;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}
