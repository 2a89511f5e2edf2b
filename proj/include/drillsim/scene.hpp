#pragma once

#include "drillsim/camera.hpp"
#include "drillsim/haptics.hpp"
#include "drillsim/renderer.hpp"
#include "drillsim/volume.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace drillsim {

enum class Scope { Simulator, World, Model, Object };
std::string to_string(Scope s);
Scope parse_scope(const std::string& s);

using ParamMap = std::map<std::string, std::string>;

struct PluginSpec {
  std::string name;
  Scope scope = Scope::Simulator;
  std::string target;  ///< object or model name; required for those scopes
  ParamMap params;
  friend bool operator==(const PluginSpec&, const PluginSpec&) = default;
};

struct RenderStyleSpec {
  Scope scope = Scope::World;
  std::string style_name = "default";
  ParamMap params;  ///< e.g. label = "12", color = "#ff0000"
  friend bool operator==(const RenderStyleSpec&, const RenderStyleSpec&) = default;
};

/// Style applied when nothing is declared at any scope.
RenderStyleSpec implicit_style();

struct LaunchFile {
  std::filesystem::path path;
  std::filesystem::path world_path;
  std::filesystem::path input_devices_path;
  std::vector<std::filesystem::path> model_paths;
  std::vector<PluginSpec> plugins;
  std::vector<std::string> warnings;
};

enum class ObjectKind { Camera, Light, RigidBody, Volume, Sensor, Actuator };
std::string to_string(ObjectKind k);

/// Analytic primitive for bodies. Capsules run from the pose origin along +z.
struct BodyGeometry {
  BodyShape shape = BodyShape::Sphere;
  double radius = 0.01;
  double length = 0.0;
  Rgb8 color{200, 200, 200};
  friend bool operator==(const BodyGeometry&, const BodyGeometry&) = default;
};

struct CameraSpec {
  Frustum frustum;
  double baseline = 0.065;  ///< stereo separation, m
  friend bool operator==(const CameraSpec& a, const CameraSpec& b) {
    return a.frustum.near_plane == b.frustum.near_plane && a.frustum.far_plane == b.frustum.far_plane &&
           a.frustum.fva == b.frustum.fva && a.frustum.width == b.frustum.width &&
           a.frustum.height == b.frustum.height && a.baseline == b.baseline;
  }
};

struct LightSpec {
  Vec3 direction = Vec3(0.3, -0.4, -1.0).normalized();
  double ambient = 0.25;
  friend bool operator==(const LightSpec&, const LightSpec&) = default;
};

bool operator==(const VolumeSource& a, const VolumeSource& b);
bool operator==(const DrillConfig& a, const DrillConfig& b);

struct ObjectSpec {
  std::string name;
  ObjectKind kind = ObjectKind::RigidBody;
  std::string parent;  ///< empty for roots
  Pose pose;           ///< parent_from_object
  std::string model;   ///< owning model; empty for world-level objects
  std::optional<RenderStyleSpec> style;  ///< object-scope declaration
  std::optional<CameraSpec> camera;
  std::optional<LightSpec> light;
  std::optional<BodyGeometry> body;
  std::optional<VolumeSource> volume;
  std::optional<DrillConfig> drill;
  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

struct JointSpec {
  std::string name;
  std::string parent;
  std::string child;
  std::string type;
  friend bool operator==(const JointSpec&, const JointSpec&) = default;
};

struct ModelSpec {
  std::string name;
  std::vector<std::string> objects;  ///< declaration order
  std::vector<RenderStyleSpec> styles;
  std::vector<JointSpec> joints;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct InputDevice {
  std::string name;
  std::string channel;  ///< "control_drill" or "control_camera"
  std::string target;   ///< object driven by the channel
  friend bool operator==(const InputDevice&, const InputDevice&) = default;
};

struct Diagnostic {
  enum class Severity { Warning, Error };
  Severity severity = Severity::Error;
  std::string object;
  std::string message;
};

struct SceneDescription {
  Vec3 gravity = Vec3(0, 0, -9.81);
  std::map<std::string, ObjectSpec> objects;
  std::map<std::string, std::string> parent_edges;  ///< child -> parent
  std::vector<ModelSpec> models;
  std::vector<RenderStyleSpec> world_styles;
  std::vector<InputDevice> input_devices;
  std::vector<PluginSpec> plugins;
  std::map<std::string, RenderStyleSpec> styles;  ///< effective style per object
  std::vector<std::string> warnings;

  const ObjectSpec& object(const std::string& name) const;
  const ObjectSpec* find(const std::string& name) const;
  const ModelSpec* find_model(const std::string& name) const;
  /// world_from_object, composing parent poses.
  Pose world_pose(const std::string& name) const;
  std::vector<const ObjectSpec*> of_kind(ObjectKind kind) const;
};

/// Field-for-field comparison of everything except warnings.
bool same_scene(const SceneDescription& a, const SceneDescription& b);

LaunchFile parse_launch(const std::filesystem::path& path);
SceneDescription load_scene(const LaunchFile& launch);
inline SceneDescription load_scene(const std::filesystem::path& launch_path) {
  return load_scene(parse_launch(launch_path));
}

/// Recomputes effective styles from the declared ones (object > model > world > implicit).
void resolve_styles(SceneDescription& scene);

std::vector<Diagnostic> validate_scene(const SceneDescription& scene);

/// Writes launch.yaml, world.yaml, input_devices.yaml and one file per model into `dir`.
std::filesystem::path write_scene(const SceneDescription& scene, const std::filesystem::path& dir);

/// Stand-alone volume descriptor files as written by `convert`.
VolumeSource read_volume_descriptor(const std::filesystem::path& path);
void write_volume_descriptor(const VolumeSource& source, const std::filesystem::path& path);

}  // namespace drillsim
