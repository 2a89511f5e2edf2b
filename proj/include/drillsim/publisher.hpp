#pragma once

#include "drillsim/frame.hpp"
#include "drillsim/wire.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace drillsim {

struct PublisherConfig {
  double frame_hz = 1000.0 / 33.0;    ///< rate FrameBundles are produced at
  std::optional<double> publish_hz;   ///< user-specified frame topic rate; unset = every frame
  bool physics_rate_poses = false;    ///< also publish poses on every tick
};

/// Turns FrameBundles and TickRecords into topic messages.
class Publisher {
 public:
  explicit Publisher(PublisherConfig config = {});

  /// Publish every ratio()-th FrameBundle (frames ratio, 2*ratio, ...).
  int ratio() const { return ratio_; }
  bool publishes(std::uint64_t frame_index) const { return frame_index % static_cast<std::uint64_t>(ratio_) == 0; }

  /// Empty when the frame is skipped by the rate ratio.
  std::vector<Message> on_frame(const FrameBundle& f) const;
  std::vector<Message> on_tick(const TickRecord& r) const;

 private:
  PublisherConfig config_;
  int ratio_ = 1;
};

/// left, right, depth, seg, cloud, camera_info x2, then one pose per tracked object.
std::vector<Message> frame_messages(const FrameBundle& f);
/// force, then a voxel_edit when voxels were removed, then (optionally) poses with frame 0.
std::vector<Message> tick_messages(const TickRecord& r, bool include_poses);

}  // namespace drillsim
