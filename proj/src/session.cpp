#include "drillsim/session.hpp"

#include "drillsim/server.hpp"

#include <json.hpp>

#include <chrono>
#include <thread>

namespace drillsim {

namespace {

/// Wraps an input with wall-clock pacing and an external stop flag.
class PacedInput : public InputSource {
 public:
  PacedInput(InputSource& inner, const SessionOptions& o, double hz) : inner_(inner), options_(o), hz_(hz) {}

  bool poll(std::uint64_t tick, double t, ControlState& latched) override {
    if (options_.interrupt && options_.interrupt->load()) {
      interrupted = true;
      return false;
    }
    if (options_.realtime) {
      if (!start_) start_ = std::chrono::steady_clock::now() - std::chrono::nanoseconds(static_cast<std::int64_t>((tick - 1) * 1e9 / hz_));
      std::this_thread::sleep_until(*start_ + std::chrono::nanoseconds(static_cast<std::int64_t>(tick * 1e9 / hz_)));
    }
    return inner_.poll(tick, t, latched);
  }

  bool interrupted = false;

 private:
  InputSource& inner_;
  const SessionOptions& options_;
  double hz_;
  std::optional<std::chrono::steady_clock::time_point> start_;
};

}  // namespace

std::string recording_header(const Simulation& sim, const std::string& trajectory_name) {
  nlohmann::json j;
  const SimConfig& c = sim.config();
  const Frustum& f = sim.rig().left.frustum;
  j["format"] = "drillsim-recording";
  j["physics_hz"] = c.physics_hz;
  j["render_every"] = c.render_every;
  j["width"] = f.width;
  j["height"] = f.height;
  j["baseline"] = sim.rig().baseline;
  j["seed"] = c.seed;
  j["rig"] = sim.rig_name();
  j["drill"] = sim.drill_name();
  j["tracked"] = sim.tracked_names();
  j["trajectory"] = trajectory_name;
  const VoxelDims& d = sim.volume().dims();
  j["volume_dims"] = {d.x, d.y, d.z};
  return j.dump();
}

SessionResult run_session(Simulation& sim, InputSource& input, std::uint64_t max_ticks, const SessionOptions& options) {
  PublisherConfig pc;
  pc.frame_hz = sim.config().physics_hz / sim.config().render_every;
  pc.publish_hz = options.publish_hz;
  pc.physics_rate_poses = options.physics_rate_poses;
  const Publisher publisher(pc);

  std::optional<RecordingWriter> writer;
  if (options.record) writer.emplace(*options.record, recording_header(sim, options.trajectory_name), options.overwrite);

  SessionResult result;
  const auto emit = [&](const std::vector<Message>& ms) {
    for (const Message& m : ms) {
      if (writer) writer->write(m);
      if (options.server) options.server->publish(m);
      ++result.messages;
    }
  };
  PacedInput paced(input, options, sim.config().physics_hz);
  result.summary = sim.run(
      paced, max_ticks,
      [&](const TickRecord& r) {
        emit(publisher.on_tick(r));
        if (options.on_tick) options.on_tick(r);
      },
      [&](const FrameBundle& f) {
        auto ms = publisher.on_frame(f);
        if (!ms.empty()) ++result.frames_published;
        emit(ms);
        if (options.on_frame) options.on_frame(f);
      });
  result.interrupted = paced.interrupted;
  if (writer) {
    writer->close();
    result.recorded_bytes = writer->bytes();
  }
  return result;
}

}  // namespace drillsim
