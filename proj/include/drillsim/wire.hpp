#pragma once

#include "drillsim/frame.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drillsim {

enum class Topic : std::uint8_t {
  Handshake = 0,
  ColorLeft = 1,
  ColorRight = 2,
  Depth = 3,
  Seg = 4,
  PointCloud = 5,
  Pose = 6,
  CameraInfo = 7,
  VoxelEdit = 8,
  Force = 9,
  ControlDrill = 16,
  ControlCamera = 17,
};

std::string topic_name(Topic t);
std::optional<Topic> topic_from_name(const std::string& name);
bool is_known_topic(std::uint8_t id);

/// One framed message: fixed 24-byte little-endian prefix, JSON header, payload.
struct Message {
  Topic topic = Topic::Handshake;
  std::uint64_t timestamp_ns = 0;
  std::string header = "{}";
  std::vector<std::uint8_t> payload;
  friend bool operator==(const Message&, const Message&) = default;
};

namespace wire {
inline constexpr std::uint32_t kFrameMagic = 0x414D4250;  // "AMBP"
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kPrefixSize = 24;
inline constexpr std::uint32_t kMaxHeader = 1u << 20;
inline constexpr std::uint32_t kMaxPayload = 1u << 30;

inline constexpr std::size_t kPoseSize = 80;
inline constexpr std::size_t kCameraInfoSize = 128;
inline constexpr std::size_t kForceSize = 22;
inline constexpr std::size_t kControlDrillSize = 65;
inline constexpr std::size_t kControlCameraSize = 64;
inline constexpr std::size_t kCloudPointSize = 16;
inline constexpr std::size_t kEditVoxelSize = 14;
}  // namespace wire

void append_frame(std::vector<std::uint8_t>& out, const Message& m);
std::vector<std::uint8_t> encode_frame(const Message& m);

enum class DecodeStatus { Ok, NeedMore, Corrupt };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::NeedMore;
  Message message;
  std::size_t consumed = 0;
  std::string error;
};

/// Decodes one frame from the front of `data`.
DecodeResult decode_frame(const std::uint8_t* data, std::size_t size);

/// Checks the payload length against the topic schema; returns an error text or nullopt.
std::optional<std::string> check_payload(const Message& m);

// ---- typed payloads

Message color_message(Topic side, const FrameBuffers& fb, const std::string& camera, std::uint64_t frame,
                      std::uint64_t ts);
Message depth_message(const std::vector<float>& depth, int width, int height, const std::string& camera,
                      std::uint64_t frame, std::uint64_t ts);
Message seg_message(const FrameBuffers& fb, const std::string& camera, std::uint64_t frame, std::uint64_t ts);
Message cloud_message(const PointCloud& cloud, const std::string& camera, std::uint64_t frame, std::uint64_t ts);
Message pose_message(const NamedPose& pose, std::uint64_t frame, std::uint64_t ts);
Message camera_info_message(const CameraInfo& info, std::uint64_t frame, std::uint64_t ts);
Message voxel_edit_message(const VoxelEdit& edit, std::uint64_t ts);

struct ForceSample {
  std::uint64_t tick = 0;
  float fx = 0, fy = 0, fz = 0;
  bool contact = false;
  std::uint8_t s_max = 0;
  friend bool operator==(const ForceSample&, const ForceSample&) = default;
};
Message force_message(const ForceSample& f, std::uint64_t ts);

struct DrillControl {
  std::uint64_t tick = 0;
  Pose pose;
  bool drilling_enabled = false;
};
Message drill_control_message(const DrillControl& c, std::uint64_t ts);

struct CameraControl {
  std::uint64_t tick = 0;
  Pose pose;
};
Message camera_control_message(const CameraControl& c, std::uint64_t ts);

struct Handshake {
  std::string role = "subscriber";  ///< "subscriber" or "controller"
  std::vector<Topic> topics;        ///< empty: everything
};
Message handshake_message(const Handshake& h);

// Decoders throw Error(CorruptRecording) on schema mismatch.
NamedPose decode_pose(const Message& m);
CameraInfo decode_camera_info(const Message& m);
VoxelEdit decode_voxel_edit(const Message& m);
ForceSample decode_force(const Message& m);
DrillControl decode_drill_control(const Message& m);
CameraControl decode_camera_control(const Message& m);
Handshake decode_handshake(const Message& m);
std::vector<float> decode_depth(const Message& m, int* width, int* height);
PointCloud decode_cloud(const Message& m);

/// frame index from a frame-topic header, if present.
std::optional<std::uint64_t> header_frame(const Message& m);

}  // namespace drillsim
