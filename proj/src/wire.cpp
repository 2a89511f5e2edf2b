#include "drillsim/wire.hpp"

#include "drillsim/error.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>

namespace drillsim {

using json = nlohmann::json;

namespace {

constexpr std::pair<Topic, const char*> kTopics[] = {
    {Topic::Handshake, "handshake"},     {Topic::ColorLeft, "color_left"},   {Topic::ColorRight, "color_right"},
    {Topic::Depth, "depth"},             {Topic::Seg, "seg"},                {Topic::PointCloud, "point_cloud"},
    {Topic::Pose, "pose"},               {Topic::CameraInfo, "camera_info"}, {Topic::VoxelEdit, "voxel_edit"},
    {Topic::Force, "force"},             {Topic::ControlDrill, "control_drill"},
    {Topic::ControlCamera, "control_camera"},
};

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void pose(const Pose& p) {
    f64(p.position.x());
    f64(p.position.y());
    f64(p.position.z());
    f64(p.orientation.w());
    f64(p.orientation.x());
    f64(p.orientation.y());
    f64(p.orientation.z());
  }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t n, const char* what) : p_(p), n_(n), what_(what) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  Pose pose() {
    Pose p;
    p.position.x() = f64();
    p.position.y() = f64();
    p.position.z() = f64();
    const double w = f64(), x = f64(), y = f64(), z = f64();
    p.orientation = Quat(w, x, y, z);
    return p;
  }
  std::size_t remaining() const { return n_ - pos_; }

 private:
  std::uint64_t le(int n) {
    if (pos_ + n > n_) throw Error(ErrorCode::CorruptRecording, std::string(what_) + " payload too short");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
  const char* what_;
};

std::string frame_header(std::uint64_t frame, const std::string& camera, int w, int h, const char* encoding) {
  json j;
  j["frame"] = frame;
  j["camera"] = camera;
  j["width"] = w;
  j["height"] = h;
  j["encoding"] = encoding;
  return j.dump();
}

json parse_header(const Message& m) {
  json j = json::parse(m.header, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::CorruptRecording, "message header is not a JSON object");
  return j;
}

void expect(const Message& m, Topic t, std::size_t size) {
  if (m.topic != t) throw Error(ErrorCode::CorruptRecording, "expected topic " + topic_name(t));
  if (m.payload.size() != size)
    throw Error(ErrorCode::CorruptRecording, topic_name(t) + " payload has " + std::to_string(m.payload.size()) +
                                                 " bytes, expected " + std::to_string(size));
}

}  // namespace

std::string topic_name(Topic t) {
  for (const auto& [topic, name] : kTopics)
    if (topic == t) return name;
  return "topic_" + std::to_string(static_cast<int>(t));
}

std::optional<Topic> topic_from_name(const std::string& name) {
  for (const auto& [topic, n] : kTopics)
    if (name == n) return topic;
  return std::nullopt;
}

bool is_known_topic(std::uint8_t id) {
  for (const auto& [topic, _] : kTopics)
    if (static_cast<std::uint8_t>(topic) == id) return true;
  return false;
}

void append_frame(std::vector<std::uint8_t>& out, const Message& m) {
  if (m.header.size() > wire::kMaxHeader || m.payload.size() > wire::kMaxPayload)
    throw Error(ErrorCode::InvalidArgument, "message too large");
  out.reserve(out.size() + wire::kPrefixSize + m.header.size() + m.payload.size());
  Writer w(out);
  w.u32(wire::kFrameMagic);
  w.u8(wire::kVersion);
  w.u8(static_cast<std::uint8_t>(m.topic));
  w.u16(0);
  w.u64(m.timestamp_ns);
  w.u32(static_cast<std::uint32_t>(m.header.size()));
  w.u32(static_cast<std::uint32_t>(m.payload.size()));
  w.bytes(m.header.data(), m.header.size());
  w.bytes(m.payload.data(), m.payload.size());
}

std::vector<std::uint8_t> encode_frame(const Message& m) {
  std::vector<std::uint8_t> out;
  append_frame(out, m);
  return out;
}

DecodeResult decode_frame(const std::uint8_t* data, std::size_t size) {
  DecodeResult r;
  if (size < wire::kPrefixSize) return r;
  Reader rd(data, wire::kPrefixSize, "frame");
  const std::uint32_t magic = rd.u32();
  const std::uint8_t version = rd.u8();
  const std::uint8_t topic = rd.u8();
  const std::uint16_t reserved = rd.u16();
  const std::uint64_t ts = rd.u64();
  const std::uint32_t hlen = rd.u32();
  const std::uint32_t plen = rd.u32();
  auto corrupt = [&](std::string why) {
    r.status = DecodeStatus::Corrupt;
    r.error = std::move(why);
    return r;
  };
  if (magic != wire::kFrameMagic) return corrupt("bad frame magic");
  if (version != wire::kVersion) return corrupt("unsupported frame version " + std::to_string(version));
  if (reserved != 0) return corrupt("reserved field is not zero");
  if (!is_known_topic(topic)) return corrupt("unknown topic " + std::to_string(topic));
  if (hlen > wire::kMaxHeader || plen > wire::kMaxPayload) return corrupt("frame length out of range");
  const std::size_t total = wire::kPrefixSize + hlen + plen;
  if (size < total) return r;
  r.message.topic = static_cast<Topic>(topic);
  r.message.timestamp_ns = ts;
  r.message.header.assign(reinterpret_cast<const char*>(data + wire::kPrefixSize), hlen);
  r.message.payload.assign(data + wire::kPrefixSize + hlen, data + total);
  r.consumed = total;
  r.status = DecodeStatus::Ok;
  return r;
}

std::optional<std::string> check_payload(const Message& m) {
  const std::size_t n = m.payload.size();
  auto dims = [&](std::size_t bpp) -> std::optional<std::string> {
    json j = json::parse(m.header, nullptr, false);
    if (j.is_discarded() || !j.contains("width") || !j.contains("height")) return "image header lacks width/height";
    const std::size_t want = j["width"].get<std::size_t>() * j["height"].get<std::size_t>() * bpp;
    if (n != want) return "image payload has " + std::to_string(n) + " bytes, expected " + std::to_string(want);
    return std::nullopt;
  };
  auto fixed = [&](std::size_t want) -> std::optional<std::string> {
    if (n != want) return topic_name(m.topic) + " payload has " + std::to_string(n) + " bytes, expected " + std::to_string(want);
    return std::nullopt;
  };
  auto counted = [&](std::size_t head, std::size_t count_offset, std::size_t item) -> std::optional<std::string> {
    if (n < head) return topic_name(m.topic) + " payload too short";
    std::uint32_t count = 0;
    for (int i = 0; i < 4; ++i) count |= static_cast<std::uint32_t>(m.payload[count_offset + i]) << (8 * i);
    return fixed(head + static_cast<std::size_t>(count) * item);
  };
  switch (m.topic) {
    case Topic::ColorLeft:
    case Topic::ColorRight: return dims(3);
    case Topic::Depth: return dims(4);
    case Topic::Seg: return dims(1);
    case Topic::PointCloud: return counted(4, 0, wire::kCloudPointSize);
    case Topic::Pose: return fixed(wire::kPoseSize);
    case Topic::CameraInfo: return fixed(wire::kCameraInfoSize);
    case Topic::VoxelEdit: return counted(12, 8, wire::kEditVoxelSize);
    case Topic::Force: return fixed(wire::kForceSize);
    case Topic::ControlDrill: return fixed(wire::kControlDrillSize);
    case Topic::ControlCamera: return fixed(wire::kControlCameraSize);
    case Topic::Handshake: return std::nullopt;
  }
  return "unknown topic";
}

Message color_message(Topic side, const FrameBuffers& fb, const std::string& camera, std::uint64_t frame,
                      std::uint64_t ts) {
  return {side, ts, frame_header(frame, camera, fb.width, fb.height, "rgb8"), fb.color};
}

Message depth_message(const std::vector<float>& depth, int width, int height, const std::string& camera,
                      std::uint64_t frame, std::uint64_t ts) {
  Message m{Topic::Depth, ts, frame_header(frame, camera, width, height, "32FC1"), {}};
  m.payload.reserve(depth.size() * 4);
  Writer w(m.payload);
  for (float d : depth) w.f32(d);
  return m;
}

Message seg_message(const FrameBuffers& fb, const std::string& camera, std::uint64_t frame, std::uint64_t ts) {
  return {Topic::Seg, ts, frame_header(frame, camera, fb.width, fb.height, "mono8"), fb.seg};
}

Message cloud_message(const PointCloud& cloud, const std::string& camera, std::uint64_t frame, std::uint64_t ts) {
  json j;
  j["frame"] = frame;
  j["camera"] = camera;
  j["fields"] = "x y z f32, r g b label u8";
  Message m{Topic::PointCloud, ts, j.dump(), {}};
  m.payload.reserve(4 + cloud.points.size() * wire::kCloudPointSize);
  Writer w(m.payload);
  w.u32(static_cast<std::uint32_t>(cloud.points.size()));
  for (const auto& p : cloud.points) {
    w.f32(p.x);
    w.f32(p.y);
    w.f32(p.z);
    w.u8(p.rgb.r);
    w.u8(p.rgb.g);
    w.u8(p.rgb.b);
    w.u8(p.label);
  }
  return m;
}

Message pose_message(const NamedPose& pose, std::uint64_t frame, std::uint64_t ts) {
  json j;
  j["frame"] = frame;
  j["name"] = pose.name;
  Message m{Topic::Pose, ts, j.dump(), {}};
  Writer w(m.payload);
  w.pose(pose.pose);
  const EulerXYZ e = euler_from_quat(pose.pose.orientation);
  w.f64(e.roll);
  w.f64(e.pitch);
  w.f64(e.yaw);
  return m;
}

Message camera_info_message(const CameraInfo& info, std::uint64_t frame, std::uint64_t ts) {
  json j;
  j["frame"] = frame;
  j["name"] = info.name;
  Message m{Topic::CameraInfo, ts, j.dump(), {}};
  Writer w(m.payload);
  w.u32(static_cast<std::uint32_t>(info.frustum.width));
  w.u32(static_cast<std::uint32_t>(info.frustum.height));
  w.f64(info.frustum.near_plane);
  w.f64(info.frustum.far_plane);
  w.f64(info.frustum.fva);
  w.f64(info.k.fx);
  w.f64(info.k.fy);
  w.f64(info.k.cx);
  w.f64(info.k.cy);
  w.f64(info.baseline);
  w.pose(info.pose);
  return m;
}

Message voxel_edit_message(const VoxelEdit& edit, std::uint64_t ts) {
  Message m{Topic::VoxelEdit, ts, "{}", {}};
  m.payload.reserve(12 + edit.removed.size() * wire::kEditVoxelSize);
  Writer w(m.payload);
  w.u64(edit.tick);
  w.u32(static_cast<std::uint32_t>(edit.removed.size()));
  for (const auto& v : edit.removed) {
    w.u32(v.x);
    w.u32(v.y);
    w.u32(v.z);
    w.u8(v.prior_intensity);
    w.u8(v.prior_label);
  }
  return m;
}

Message force_message(const ForceSample& f, std::uint64_t ts) {
  Message m{Topic::Force, ts, "{}", {}};
  Writer w(m.payload);
  w.u64(f.tick);
  w.f32(f.fx);
  w.f32(f.fy);
  w.f32(f.fz);
  w.u8(f.contact ? 1 : 0);
  w.u8(f.s_max);
  return m;
}

Message drill_control_message(const DrillControl& c, std::uint64_t ts) {
  Message m{Topic::ControlDrill, ts, "{}", {}};
  Writer w(m.payload);
  w.u64(c.tick);
  w.pose(c.pose);
  w.u8(c.drilling_enabled ? 1 : 0);
  return m;
}

Message camera_control_message(const CameraControl& c, std::uint64_t ts) {
  Message m{Topic::ControlCamera, ts, "{}", {}};
  Writer w(m.payload);
  w.u64(c.tick);
  w.pose(c.pose);
  return m;
}

Message handshake_message(const Handshake& h) {
  json j;
  j["role"] = h.role;
  j["topics"] = json::array();
  for (Topic t : h.topics) j["topics"].push_back(topic_name(t));
  return {Topic::Handshake, 0, j.dump(), {}};
}

NamedPose decode_pose(const Message& m) {
  expect(m, Topic::Pose, wire::kPoseSize);
  Reader r(m.payload.data(), m.payload.size(), "pose");
  NamedPose p;
  p.pose = r.pose();
  const json j = parse_header(m);
  p.name = j.value("name", "");
  return p;
}

CameraInfo decode_camera_info(const Message& m) {
  expect(m, Topic::CameraInfo, wire::kCameraInfoSize);
  Reader r(m.payload.data(), m.payload.size(), "camera_info");
  CameraInfo c;
  c.frustum.width = static_cast<int>(r.u32());
  c.frustum.height = static_cast<int>(r.u32());
  c.frustum.near_plane = r.f64();
  c.frustum.far_plane = r.f64();
  c.frustum.fva = r.f64();
  c.k.fx = r.f64();
  c.k.fy = r.f64();
  c.k.cx = r.f64();
  c.k.cy = r.f64();
  c.baseline = r.f64();
  c.pose = r.pose();
  c.name = parse_header(m).value("name", "");
  return c;
}

VoxelEdit decode_voxel_edit(const Message& m) {
  if (auto err = check_payload(m); err || m.topic != Topic::VoxelEdit)
    throw Error(ErrorCode::CorruptRecording, err.value_or("expected voxel_edit"));
  Reader r(m.payload.data(), m.payload.size(), "voxel_edit");
  VoxelEdit e;
  e.tick = r.u64();
  const std::uint32_t n = r.u32();
  e.removed.resize(n);
  for (auto& v : e.removed) {
    v.x = r.u32();
    v.y = r.u32();
    v.z = r.u32();
    v.prior_intensity = r.u8();
    v.prior_label = r.u8();
  }
  return e;
}

ForceSample decode_force(const Message& m) {
  expect(m, Topic::Force, wire::kForceSize);
  Reader r(m.payload.data(), m.payload.size(), "force");
  ForceSample f;
  f.tick = r.u64();
  f.fx = r.f32();
  f.fy = r.f32();
  f.fz = r.f32();
  f.contact = r.u8() != 0;
  f.s_max = r.u8();
  return f;
}

DrillControl decode_drill_control(const Message& m) {
  expect(m, Topic::ControlDrill, wire::kControlDrillSize);
  Reader r(m.payload.data(), m.payload.size(), "control_drill");
  DrillControl c;
  c.tick = r.u64();
  c.pose = r.pose();
  c.drilling_enabled = r.u8() != 0;
  return c;
}

CameraControl decode_camera_control(const Message& m) {
  expect(m, Topic::ControlCamera, wire::kControlCameraSize);
  Reader r(m.payload.data(), m.payload.size(), "control_camera");
  CameraControl c;
  c.tick = r.u64();
  c.pose = r.pose();
  return c;
}

Handshake decode_handshake(const Message& m) {
  if (m.topic != Topic::Handshake) throw Error(ErrorCode::InvalidArgument, "first message must be a handshake");
  const json j = json::parse(m.header, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::InvalidArgument, "handshake header is not JSON");
  Handshake h;
  h.role = j.value("role", "subscriber");
  if (h.role != "subscriber" && h.role != "controller")
    throw Error(ErrorCode::InvalidArgument, "handshake role must be subscriber or controller");
  if (j.contains("topics")) {
    for (const auto& t : j["topics"]) {
      if (t.is_string()) {
        auto topic = topic_from_name(t.get<std::string>());
        if (!topic) throw Error(ErrorCode::InvalidArgument, "unknown topic '" + t.get<std::string>() + "'");
        h.topics.push_back(*topic);
      } else if (t.is_number_unsigned() && is_known_topic(t.get<std::uint8_t>())) {
        h.topics.push_back(static_cast<Topic>(t.get<std::uint8_t>()));
      } else {
        throw Error(ErrorCode::InvalidArgument, "bad topic in handshake");
      }
    }
  }
  return h;
}

std::vector<float> decode_depth(const Message& m, int* width, int* height) {
  if (m.topic != Topic::Depth) throw Error(ErrorCode::CorruptRecording, "expected depth");
  if (auto err = check_payload(m)) throw Error(ErrorCode::CorruptRecording, *err);
  const json j = parse_header(m);
  if (width) *width = j["width"].get<int>();
  if (height) *height = j["height"].get<int>();
  std::vector<float> out(m.payload.size() / 4);
  Reader r(m.payload.data(), m.payload.size(), "depth");
  for (auto& d : out) d = r.f32();
  return out;
}

PointCloud decode_cloud(const Message& m) {
  if (m.topic != Topic::PointCloud) throw Error(ErrorCode::CorruptRecording, "expected point_cloud");
  if (auto err = check_payload(m)) throw Error(ErrorCode::CorruptRecording, *err);
  Reader r(m.payload.data(), m.payload.size(), "point_cloud");
  PointCloud c;
  c.points.resize(r.u32());
  for (auto& p : c.points) {
    p.x = r.f32();
    p.y = r.f32();
    p.z = r.f32();
    p.rgb.r = r.u8();
    p.rgb.g = r.u8();
    p.rgb.b = r.u8();
    p.label = r.u8();
  }
  return c;
}

std::optional<std::uint64_t> header_frame(const Message& m) {
  const json j = json::parse(m.header, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("frame") || !j["frame"].is_number_unsigned()) return std::nullopt;
  return j["frame"].get<std::uint64_t>();
}

}  // namespace drillsim
