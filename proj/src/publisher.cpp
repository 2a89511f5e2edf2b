#include "drillsim/publisher.hpp"

#include "drillsim/error.hpp"

#include <cmath>

namespace drillsim {

Publisher::Publisher(PublisherConfig config) : config_(config) {
  if (!(config_.frame_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "frame rate must be positive");
  if (config_.publish_hz) {
    if (!(*config_.publish_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "publish rate must be positive");
    ratio_ = std::max(1, static_cast<int>(std::lround(config_.frame_hz / *config_.publish_hz)));
  }
}

std::vector<Message> Publisher::on_frame(const FrameBundle& f) const {
  if (!publishes(f.index)) return {};
  return frame_messages(f);
}

std::vector<Message> Publisher::on_tick(const TickRecord& r) const { return tick_messages(r, config_.physics_rate_poses); }

std::vector<Message> frame_messages(const FrameBundle& f) {
  const std::uint64_t ts = f.timestamp_ns;
  const FrameBuffers& left = f.stereo.left;
  std::vector<Message> out;
  out.reserve(7 + f.poses.size());
  out.push_back(color_message(Topic::ColorLeft, left, f.left_info.name, f.index, ts));
  out.push_back(color_message(Topic::ColorRight, f.stereo.right, f.right_info.name, f.index, ts));
  out.push_back(depth_message(f.depth, left.width, left.height, f.left_info.name, f.index, ts));
  out.push_back(seg_message(left, f.left_info.name, f.index, ts));
  out.push_back(cloud_message(f.cloud, f.left_info.name, f.index, ts));
  out.push_back(camera_info_message(f.left_info, f.index, ts));
  out.push_back(camera_info_message(f.right_info, f.index, ts));
  for (const NamedPose& p : f.poses) out.push_back(pose_message(p, f.index, ts));
  return out;
}

std::vector<Message> tick_messages(const TickRecord& r, bool include_poses) {
  std::vector<Message> out;
  ForceSample fs;
  fs.tick = r.tick;
  fs.fx = static_cast<float>(r.force.x());
  fs.fy = static_cast<float>(r.force.y());
  fs.fz = static_cast<float>(r.force.z());
  fs.contact = r.contact;
  fs.s_max = static_cast<std::uint8_t>(r.s_max);
  out.push_back(force_message(fs, r.timestamp_ns));
  if (r.edit && !r.edit->empty()) out.push_back(voxel_edit_message(*r.edit, r.timestamp_ns));
  if (include_poses)
    for (const NamedPose& p : r.poses) out.push_back(pose_message(p, 0, r.timestamp_ns));
  return out;
}

}  // namespace drillsim
