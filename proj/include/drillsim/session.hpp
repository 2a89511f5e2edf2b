#pragma once

#include "drillsim/publisher.hpp"
#include "drillsim/recording.hpp"
#include "drillsim/simulation.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace drillsim {

class StreamServer;

struct SessionOptions {
  std::optional<std::filesystem::path> record;
  bool overwrite = false;
  std::optional<double> publish_hz;
  bool physics_rate_poses = false;
  bool realtime = false;                          ///< pace ticks to the wall clock (live serving)
  const std::atomic<bool>* interrupt = nullptr;   ///< set asynchronously to stop after the current tick
  std::string trajectory_name;                    ///< goes into the recording header
  StreamServer* server = nullptr;
  std::function<void(const FrameBundle&)> on_frame;
  std::function<void(const TickRecord&)> on_tick;
};

struct SessionResult {
  RunSummary summary;
  std::uint64_t frames_published = 0;
  std::uint64_t messages = 0;
  std::uint64_t recorded_bytes = 0;
  bool interrupted = false;
};

/// Recording header for a simulation: loop rates, image size, rig, tracked
/// names. No wall-clock values, so equal runs give equal files.
std::string recording_header(const Simulation& sim, const std::string& trajectory_name);

/// Runs the loop, publishing every message to the recording and/or the server.
SessionResult run_session(Simulation& sim, InputSource& input, std::uint64_t max_ticks, const SessionOptions& options);

}  // namespace drillsim
