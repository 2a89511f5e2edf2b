#include "drillsim/trajectory.hpp"

#include "drillsim/error.hpp"
#include "yaml_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace drillsim {

void Trajectory::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!std::isfinite(s.t)) throw Error(ErrorCode::InvalidArgument, "trajectory sample time is not finite");
    if (i > 0 && !(s.t > samples[i - 1].t))
      throw Error(ErrorCode::InvalidArgument, "trajectory times must be strictly increasing (sample " + std::to_string(i) + ")");
    if ((s.camera_pose && !is_finite(*s.camera_pose)) || (s.drill_pose && !is_finite(*s.drill_pose)))
      throw Error(ErrorCode::InvalidArgument, "trajectory pose is not finite (sample " + std::to_string(i) + ")");
  }
}

namespace {

template <typename Get>
std::optional<Pose> eval_channel(const std::vector<TrajectorySample>& samples, double t, Interpolation mode, Get get) {
  const TrajectorySample* before = nullptr;
  const TrajectorySample* after = nullptr;
  for (const auto& s : samples) {
    if (!get(s)) continue;
    if (s.t <= t) before = &s;
    else if (!after) after = &s;
  }
  if (!before && !after) return std::nullopt;
  if (!before) return *get(*after);
  if (!after || mode == Interpolation::Hold) return *get(*before);
  const double u = (t - before->t) / (after->t - before->t);
  return interpolate(*get(*before), *get(*after), u);
}

}  // namespace

ControlState Trajectory::evaluate(double t) const {
  ControlState c;
  c.camera_pose = eval_channel(samples, t, interpolation, [](const TrajectorySample& s) { return s.camera_pose; });
  c.drill_pose = eval_channel(samples, t, interpolation, [](const TrajectorySample& s) { return s.drill_pose; });
  std::optional<bool> drilling;
  for (const auto& s : samples) {
    if (!s.drilling_enabled) continue;
    if (s.t <= t || !drilling) drilling = *s.drilling_enabled;
    if (s.t > t) break;
  }
  c.drilling_enabled = drilling.value_or(false);
  return c;
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  const YAML::Node root = yamlu::load_file(path);
  const std::string file = path.string();
  std::vector<std::string> warnings;
  yamlu::MapReader r(root, "trajectory", file, &warnings);
  Trajectory traj;
  const std::string mode = r.value<std::string>("interpolation", "linear");
  if (mode == "linear") traj.interpolation = Interpolation::Linear;
  else if (mode == "hold") traj.interpolation = Interpolation::Hold;
  else throw Error(ErrorCode::MalformedDocument, file + ": interpolation must be linear or hold");
  const YAML::Node list = r.require("samples");
  if (!list.IsSequence()) throw Error(ErrorCode::MalformedDocument, file + ": samples must be a list");
  for (const auto& item : list) {
    yamlu::MapReader s(item, "trajectory sample", file, &warnings);
    TrajectorySample ts;
    ts.t = s.required<double>("t");
    if (const YAML::Node p = s.get("camera_pose")) ts.camera_pose = yamlu::parse_pose(p, "camera_pose", file, &warnings);
    if (const YAML::Node p = s.get("drill_pose")) ts.drill_pose = yamlu::parse_pose(p, "drill_pose", file, &warnings);
    if (const YAML::Node d = s.get("drilling_enabled")) ts.drilling_enabled = s.as<bool>(d);
    s.finish();
    traj.samples.push_back(ts);
  }
  r.finish();
  traj.validate();
  return traj;
}

void write_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap << YAML::Key << "interpolation" << YAML::Value
      << (traj.interpolation == Interpolation::Linear ? "linear" : "hold");
  out << YAML::Key << "samples" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : traj.samples) {
    out << YAML::BeginMap << YAML::Key << "t" << YAML::Value << s.t;
    if (s.camera_pose) {
      out << YAML::Key << "camera_pose" << YAML::Value;
      yamlu::emit_pose(out, *s.camera_pose);
    }
    if (s.drill_pose) {
      out << YAML::Key << "drill_pose" << YAML::Value;
      yamlu::emit_pose(out, *s.drill_pose);
    }
    if (s.drilling_enabled) out << YAML::Key << "drilling_enabled" << YAML::Value << *s.drilling_enabled;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f << out.c_str() << "\n";
}

std::optional<BuiltinSetting> parse_builtin_setting(const std::string& name) {
  if (name == "moving_camera") return BuiltinSetting::MovingCamera;
  if (name == "moving_drill") return BuiltinSetting::MovingDrill;
  return std::nullopt;
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 x = forward.cross(up);
  if (x.norm() < 1e-9) x = forward.cross(Vec3::UnitY().cross(forward).norm() > 1e-9 ? Vec3::UnitY() : Vec3::UnitX());
  x.normalize();
  const Vec3 y = x.cross(forward);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = -forward;
  return Pose{eye, canonical(Quat(r))}.normalized();
}

namespace {

/// Uniform double in [0, 1) from raw engine bits; distributions are not portable.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double ease(double u) { return 0.5 - 0.5 * std::cos(kPi * u); }

}  // namespace

Trajectory make_builtin_trajectory(BuiltinSetting setting, int frames, const TrajectoryContext& ctx) {
  if (frames < 1) throw Error(ErrorCode::InvalidArgument, "frames must be >= 1");
  if (ctx.render_every < 1 || !(ctx.physics_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "bad loop rates");
  std::mt19937_64 rng(ctx.seed);
  const double phase = 2.0 * kPi * unit(rng);
  const double wobble = 0.9 + 0.2 * unit(rng);

  Trajectory traj;
  traj.interpolation = Interpolation::Linear;
  for (int i = 1; i <= frames; ++i) {
    TrajectorySample s;
    s.t = static_cast<double>(i) * ctx.render_every / ctx.physics_hz;
    const double u = frames == 1 ? 0.0 : static_cast<double>(i - 1) / (frames - 1);
    if (setting == BuiltinSetting::MovingCamera) {
      const double yaw = (-30.0 + 60.0 * ease(u)) * kPi / 180.0;
      const Quat rz(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
      const Vec3 rel = ctx.camera_home.position - ctx.target;
      Vec3 eye = ctx.target + rz * rel;
      eye.z() += 0.002 * wobble * std::sin(2.0 * kPi * u + phase);
      s.camera_pose = Pose{eye, rz * ctx.camera_home.orientation}.normalized();
      s.drill_pose = ctx.drill_home;
      s.drilling_enabled = false;
    } else {
      // plunge from above the volume to 45% height, then sweep along x
      const double top = ctx.target.z() + 0.5 * ctx.extent.z() + 0.005;
      const double bottom = ctx.target.z() - 0.05 * ctx.extent.z();
      const double plunge = std::min(1.0, u / 0.3);
      const double sweep = u <= 0.3 ? 0.0 : (u - 0.3) / 0.7;
      Vec3 tip(ctx.target.x(), ctx.target.y(), top + (bottom - top) * ease(plunge));
      tip.x() += 0.2 * ctx.extent.x() * wobble * std::sin(2.0 * kPi * sweep);
      tip.y() += 0.05 * ctx.extent.y() * std::sin(kPi * sweep + phase) - 0.05 * ctx.extent.y() * std::sin(phase);
      s.camera_pose = ctx.camera_home;
      s.drill_pose = Pose{tip, Quat::Identity()};
      s.drilling_enabled = true;
    }
    traj.samples.push_back(s);
  }
  return traj;
}

}  // namespace drillsim
