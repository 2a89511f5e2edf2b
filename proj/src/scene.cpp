#include "drillsim/scene.hpp"

#include "drillsim/error.hpp"
#include "drillsim/plugin.hpp"
#include "yaml_util.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace drillsim {

namespace fs = std::filesystem;
using yamlu::MapReader;

std::string to_string(Scope s) {
  switch (s) {
    case Scope::Simulator: return "simulator";
    case Scope::World: return "world";
    case Scope::Model: return "model";
    case Scope::Object: return "object";
  }
  return "?";
}

Scope parse_scope(const std::string& s) {
  if (s == "simulator") return Scope::Simulator;
  if (s == "world") return Scope::World;
  if (s == "model") return Scope::Model;
  if (s == "object") return Scope::Object;
  throw Error(ErrorCode::MalformedDocument, "unknown scope '" + s + "'");
}

std::string to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::Camera: return "camera";
    case ObjectKind::Light: return "light";
    case ObjectKind::RigidBody: return "rigid_body";
    case ObjectKind::Volume: return "volume";
    case ObjectKind::Sensor: return "sensor";
    case ObjectKind::Actuator: return "actuator";
  }
  return "?";
}

RenderStyleSpec implicit_style() { return {Scope::World, "default", {}}; }

bool operator==(const VolumeSource& a, const VolumeSource& b) {
  return a.directory == b.directory && a.prefix == b.prefix && a.count == b.count && a.format == b.format &&
         a.spacing == b.spacing && a.origin == b.origin && a.label_map == b.label_map;
}

bool operator==(const DrillConfig& a, const DrillConfig& b) {
  return a.tip_radius == b.tip_radius && a.shaft_radius == b.shaft_radius && a.shaft_count == b.shaft_count &&
         a.shaft_start == b.shaft_start && a.shaft_spacing == b.shaft_spacing && a.shaft_axis == b.shaft_axis &&
         a.stiffness == b.stiffness && a.max_force == b.max_force && a.epsilon == b.epsilon &&
         a.contact_tolerance == b.contact_tolerance && a.slide_iterations == b.slide_iterations &&
         a.render_length == b.render_length;
}

const ObjectSpec* SceneDescription::find(const std::string& name) const {
  auto it = objects.find(name);
  return it == objects.end() ? nullptr : &it->second;
}

const ObjectSpec& SceneDescription::object(const std::string& name) const {
  if (const ObjectSpec* o = find(name)) return *o;
  throw Error(ErrorCode::InvalidArgument, "no object named '" + name + "'");
}

const ModelSpec* SceneDescription::find_model(const std::string& name) const {
  for (const auto& m : models)
    if (m.name == name) return &m;
  return nullptr;
}

Pose SceneDescription::world_pose(const std::string& name) const {
  Pose p = object(name).pose;
  std::string cur = name;
  for (std::size_t depth = 0; depth <= objects.size(); ++depth) {
    auto it = parent_edges.find(cur);
    if (it == parent_edges.end()) return p;
    cur = it->second;
    p = object(cur).pose * p;
  }
  throw Error(ErrorCode::CyclicParent, "cycle above '" + name + "'");
}

std::vector<const ObjectSpec*> SceneDescription::of_kind(ObjectKind kind) const {
  std::vector<const ObjectSpec*> out;
  for (const auto& [_, o] : objects)
    if (o.kind == kind) out.push_back(&o);
  return out;
}

bool same_scene(const SceneDescription& a, const SceneDescription& b) {
  return a.gravity == b.gravity && a.objects == b.objects && a.parent_edges == b.parent_edges &&
         a.models == b.models && a.world_styles == b.world_styles && a.input_devices == b.input_devices &&
         a.plugins == b.plugins && a.styles == b.styles;
}

// ---------------------------------------------------------------- parsing

namespace {

ParamMap parse_params(const YAML::Node& node, const std::string& file) {
  ParamMap out;
  if (!node) return out;
  if (!node.IsMap()) throw Error(ErrorCode::MalformedDocument, yamlu::where(node, file) + ": params must be a mapping");
  for (const auto& kv : node) {
    if (!kv.second.IsScalar())
      throw Error(ErrorCode::MalformedDocument, yamlu::where(kv.second, file) + ": param values must be scalars");
    out[kv.first.Scalar()] = kv.second.Scalar();
  }
  return out;
}

PluginSpec parse_plugin(const YAML::Node& node, Scope default_scope, const std::string& default_target,
                        const std::string& file, std::vector<std::string>* warnings) {
  MapReader r(node, "plugin", file, warnings);
  PluginSpec p;
  p.name = r.required<std::string>("name");
  p.scope = parse_scope(r.value<std::string>("scope", to_string(default_scope)));
  p.target = r.value<std::string>("target", p.scope == default_scope ? default_target : std::string());
  p.params = parse_params(r.get("params"), file);
  r.finish();
  return p;
}

std::vector<PluginSpec> parse_plugins(const YAML::Node& node, Scope scope, const std::string& target,
                                      const std::string& file, std::vector<std::string>* warnings) {
  std::vector<PluginSpec> out;
  if (!node) return out;
  if (!node.IsSequence()) throw Error(ErrorCode::MalformedDocument, yamlu::where(node, file) + ": plugins must be a list");
  for (const auto& item : node) out.push_back(parse_plugin(item, scope, target, file, warnings));
  return out;
}

RenderStyleSpec parse_style(const YAML::Node& node, Scope scope, const std::string& file,
                            std::vector<std::string>* warnings) {
  MapReader r(node, "style", file, warnings);
  RenderStyleSpec s;
  s.scope = scope;
  s.style_name = r.required<std::string>("name");
  s.params = parse_params(r.get("params"), file);
  r.finish();
  return s;
}

std::vector<RenderStyleSpec> parse_styles(MapReader& r, Scope scope, std::vector<std::string>* warnings) {
  YAML::Node node = r.get("styles");
  if (!node) node = r.get("shaders");
  std::vector<RenderStyleSpec> out;
  if (!node) return out;
  if (!node.IsSequence()) throw Error(ErrorCode::MalformedDocument, yamlu::where(node, r.file()) + ": styles must be a list");
  for (const auto& item : node) out.push_back(parse_style(item, scope, r.file(), warnings));
  if (out.size() > 1 && warnings)
    warnings->push_back(yamlu::where(node, r.file()) + ": several " + to_string(scope) + " styles; the last one applies");
  return out;
}

VolumeSource parse_volume_source(const YAML::Node& node, const fs::path& base, const std::string& file,
                                 std::vector<std::string>* warnings) {
  MapReader r(node, "volume source", file, warnings);
  VolumeSource v;
  v.directory = (base / r.value<std::string>("directory", ".")).lexically_normal();
  v.prefix = r.value<std::string>("prefix", "");
  v.count = r.required<int>("count");
  v.format = r.value<std::string>("format", "png");
  if (v.format != "png" && v.format != "jpeg")
    throw Error(ErrorCode::UnsupportedEncoding, yamlu::where(node, file) + ": format must be png or jpeg");
  if (const YAML::Node s = r.get("spacing")) v.spacing = yamlu::parse_vec3(s, "spacing", file, warnings);
  if (const YAML::Node o = r.get("origin")) v.origin = yamlu::parse_pose(o, "origin", file, warnings);
  if (const YAML::Node lm = r.get("label_map")) {
    if (!lm.IsMap()) throw Error(ErrorCode::MalformedDocument, yamlu::where(lm, file) + ": label_map must be a mapping");
    for (const auto& kv : lm) {
      const std::string key = color_hex(parse_color_hex(kv.first.Scalar()));
      MapReader e(kv.second, "label_map entry", file, warnings);
      LabelEntry entry{e.required<int>("label_id"), e.value<std::string>("anatomy", "")};
      if (entry.label_id < 0 || entry.label_id > 255)
        throw Error(ErrorCode::MalformedDocument, yamlu::where(kv.second, file) + ": label_id must be in [0, 255]");
      e.finish();
      v.label_map[key] = entry;
    }
  }
  r.finish();
  return v;
}

DrillConfig parse_drill(const YAML::Node& node, const std::string& file, std::vector<std::string>* warnings) {
  MapReader r(node, "drill", file, warnings);
  DrillConfig d;
  d.tip_radius = r.value("tip_radius", d.tip_radius);
  d.shaft_radius = r.value("shaft_radius", d.shaft_radius);
  d.shaft_count = r.value("shaft_count", d.shaft_count);
  d.shaft_start = r.value("shaft_start", d.shaft_start);
  d.shaft_spacing = r.value("shaft_spacing", d.shaft_spacing);
  if (const YAML::Node a = r.get("shaft_axis")) d.shaft_axis = yamlu::parse_vec3(a, "shaft_axis", file, warnings);
  d.stiffness = r.value("stiffness", d.stiffness);
  d.max_force = r.value("max_force", d.max_force);
  d.epsilon = r.value("epsilon", d.epsilon);
  d.contact_tolerance = r.value("contact_tolerance", d.contact_tolerance);
  d.slide_iterations = r.value("slide_iterations", d.slide_iterations);
  d.render_length = r.value("render_length", d.render_length);
  r.finish();
  return d;
}

ObjectKind parse_body_kind(const std::string& s, const YAML::Node& n, const std::string& file) {
  if (s == "rigid_body") return ObjectKind::RigidBody;
  if (s == "sensor") return ObjectKind::Sensor;
  if (s == "actuator") return ObjectKind::Actuator;
  throw Error(ErrorCode::MalformedDocument, yamlu::where(n, file) + ": body kind must be rigid_body, sensor or actuator");
}

ObjectSpec parse_object(const YAML::Node& node, const std::string& section, const std::string& model,
                        const fs::path& base, const std::string& file, std::vector<std::string>* warnings) {
  MapReader r(node, section + " entry", file, warnings);
  ObjectSpec o;
  o.name = r.required<std::string>("name");
  o.model = model;
  o.parent = r.value<std::string>("parent", "");
  if (const YAML::Node p = r.get("pose")) o.pose = yamlu::parse_pose(p, o.name + ".pose", file, warnings);
  if (const YAML::Node s = r.get("style")) o.style = parse_style(s, Scope::Object, file, warnings);

  if (section == "cameras") {
    o.kind = ObjectKind::Camera;
    CameraSpec c;
    c.frustum.near_plane = r.value("near", c.frustum.near_plane);
    c.frustum.far_plane = r.value("far", c.frustum.far_plane);
    c.frustum.fva = r.value("fva", c.frustum.fva);
    c.frustum.width = r.value("width", c.frustum.width);
    c.frustum.height = r.value("height", c.frustum.height);
    c.baseline = r.value("baseline", c.baseline);
    o.camera = c;
  } else if (section == "lights") {
    o.kind = ObjectKind::Light;
    LightSpec l;
    if (const YAML::Node d = r.get("direction")) l.direction = yamlu::parse_vec3(d, "direction", file, warnings);
    l.ambient = r.value("ambient", l.ambient);
    o.light = l;
  } else if (section == "volumes") {
    o.kind = ObjectKind::Volume;
    const YAML::Node src = r.require("source");
    if (src.IsScalar()) {
      o.volume = read_volume_descriptor(base / src.Scalar());
    } else {
      o.volume = parse_volume_source(src, base, file, warnings);
    }
  } else {
    const YAML::Node k = r.get("kind");
    o.kind = k ? parse_body_kind(r.as<std::string>(k), k, file) : ObjectKind::RigidBody;
    BodyGeometry g;
    if (const YAML::Node s = r.get("shape")) {
      const std::string shape = r.as<std::string>(s);
      if (shape == "sphere") g.shape = BodyShape::Sphere;
      else if (shape == "capsule") g.shape = BodyShape::Capsule;
      else throw Error(ErrorCode::MalformedDocument, yamlu::where(s, file) + ": shape must be sphere or capsule");
    }
    g.radius = r.value("radius", g.radius);
    g.length = r.value("length", g.length);
    if (const YAML::Node c = r.get("color")) g.color = parse_color_hex(r.as<std::string>(c));
    o.body = g;
    if (const YAML::Node d = r.get("drill")) o.drill = parse_drill(d, file, warnings);
  }
  r.finish();
  return o;
}

struct FileContents {
  std::vector<ObjectSpec> objects;
  std::vector<PluginSpec> plugins;
};

void parse_object_sections(MapReader& r, const std::string& model, const fs::path& base,
                           std::vector<std::string>* warnings, FileContents& out) {
  for (const char* section : {"cameras", "lights", "bodies", "volumes"}) {
    const YAML::Node list = r.get(section);
    if (!list) continue;
    if (!list.IsSequence())
      throw Error(ErrorCode::MalformedDocument, yamlu::where(list, r.file()) + ": " + section + " must be a list");
    for (const auto& item : list) out.objects.push_back(parse_object(item, section, model, base, r.file(), warnings));
  }
}

void detect_cycles(const SceneDescription& scene) {
  for (const auto& [start, _] : scene.parent_edges) {
    std::vector<std::string> path{start};
    std::set<std::string> seen{start};
    std::string cur = start;
    for (;;) {
      auto it = scene.parent_edges.find(cur);
      if (it == scene.parent_edges.end()) break;
      cur = it->second;
      path.push_back(cur);
      if (!seen.insert(cur).second) {
        std::string msg;
        for (const auto& p : path) msg += (msg.empty() ? "" : " -> ") + p;
        throw Error(ErrorCode::CyclicParent, "cyclic parent chain: " + msg);
      }
    }
  }
}

}  // namespace

LaunchFile parse_launch(const fs::path& path) {
  const YAML::Node root = yamlu::load_file(path);
  LaunchFile lf;
  lf.path = path;
  const fs::path base = path.parent_path();
  MapReader r(root, "launch file", path.string(), &lf.warnings);
  lf.world_path = (base / r.required<std::string>("world")).lexically_normal();
  lf.input_devices_path = (base / r.required<std::string>("input_devices")).lexically_normal();
  if (const YAML::Node models = r.get("models")) {
    if (!models.IsSequence())
      throw Error(ErrorCode::MalformedDocument, yamlu::where(models, path.string()) + ": models must be a list");
    for (const auto& m : models) lf.model_paths.push_back((base / r.as<std::string>(m)).lexically_normal());
  }
  lf.plugins = parse_plugins(r.get("plugins"), Scope::Simulator, "", path.string(), &lf.warnings);
  r.finish();
  return lf;
}

SceneDescription load_scene(const LaunchFile& launch) {
  SceneDescription scene;
  scene.warnings = launch.warnings;
  auto* w = &scene.warnings;
  std::vector<ObjectSpec> all;
  std::vector<PluginSpec> plugins = launch.plugins;

  {
    const std::string file = launch.world_path.string();
    const YAML::Node root = yamlu::load_file(launch.world_path);
    MapReader r(root, "world file", file, w);
    if (const YAML::Node g = r.get("gravity")) scene.gravity = yamlu::parse_vec3(g, "gravity", file, w);
    scene.world_styles = parse_styles(r, Scope::World, w);
    FileContents fc;
    parse_object_sections(r, "", launch.world_path.parent_path(), w, fc);
    all.insert(all.end(), fc.objects.begin(), fc.objects.end());
    auto p = parse_plugins(r.get("plugins"), Scope::World, "", file, w);
    plugins.insert(plugins.end(), p.begin(), p.end());
    r.finish();
  }
  {
    const std::string file = launch.input_devices_path.string();
    const YAML::Node root = yamlu::load_file(launch.input_devices_path);
    MapReader r(root, "input devices file", file, w);
    if (const YAML::Node devices = r.get("devices")) {
      if (!devices.IsSequence())
        throw Error(ErrorCode::MalformedDocument, yamlu::where(devices, file) + ": devices must be a list");
      for (const auto& d : devices) {
        MapReader dr(d, "device", file, w);
        InputDevice dev{dr.required<std::string>("name"), dr.required<std::string>("channel"),
                        dr.required<std::string>("target")};
        dr.finish();
        scene.input_devices.push_back(dev);
      }
    }
    if (r.get("plugins")) w->push_back(file + ": plugins declared in the input devices file are ignored");
    r.finish();
  }
  for (const auto& path : launch.model_paths) {
    const std::string file = path.string();
    const YAML::Node root = yamlu::load_file(path);
    MapReader r(root, "model file", file, w);
    ModelSpec model;
    model.name = r.value<std::string>("name", path.stem().string());
    if (scene.find_model(model.name)) throw Error(ErrorCode::DuplicateObjectName, "model '" + model.name + "' declared twice");
    model.styles = parse_styles(r, Scope::Model, w);
    FileContents fc;
    parse_object_sections(r, model.name, path.parent_path(), w, fc);
    for (const auto& o : fc.objects) model.objects.push_back(o.name);
    all.insert(all.end(), fc.objects.begin(), fc.objects.end());
    if (const YAML::Node joints = r.get("joints")) {
      if (!joints.IsSequence())
        throw Error(ErrorCode::MalformedDocument, yamlu::where(joints, file) + ": joints must be a list");
      for (const auto& j : joints) {
        MapReader jr(j, "joint", file, w);
        model.joints.push_back({jr.required<std::string>("name"), jr.value<std::string>("parent", ""),
                                jr.value<std::string>("child", ""), jr.value<std::string>("type", "fixed")});
        jr.finish();
      }
    }
    auto p = parse_plugins(r.get("plugins"), Scope::Model, model.name, file, w);
    plugins.insert(plugins.end(), p.begin(), p.end());
    r.finish();
    scene.models.push_back(std::move(model));
  }

  // link phase: only after every file is in
  for (auto& o : all) {
    const std::string name = o.name;
    if (!scene.objects.emplace(name, std::move(o)).second)
      throw Error(ErrorCode::DuplicateObjectName, "object '" + name + "' declared more than once");
  }
  for (const auto& [name, o] : scene.objects) {
    if (o.parent.empty()) continue;
    if (!scene.objects.count(o.parent))
      throw Error(ErrorCode::UnresolvedParent, "object '" + name + "' has unknown parent '" + o.parent + "'");
    scene.parent_edges[name] = o.parent;
  }
  detect_cycles(scene);
  for (const auto& p : plugins)
    if (!plugin_registered(p.name)) throw Error(ErrorCode::UnknownPlugin, "unknown plugin '" + p.name + "'");
  scene.plugins = std::move(plugins);
  resolve_styles(scene);
  return scene;
}

void resolve_styles(SceneDescription& scene) {
  scene.styles.clear();
  for (const auto& [name, o] : scene.objects) {
    RenderStyleSpec s = implicit_style();
    if (!scene.world_styles.empty()) s = scene.world_styles.back();
    if (const ModelSpec* m = o.model.empty() ? nullptr : scene.find_model(o.model); m && !m->styles.empty())
      s = m->styles.back();
    if (o.style) s = *o.style;
    scene.styles[name] = s;
  }
}

std::vector<Diagnostic> validate_scene(const SceneDescription& scene) {
  std::vector<Diagnostic> out;
  auto error = [&](const std::string& obj, const std::string& msg) {
    out.push_back({Diagnostic::Severity::Error, obj, msg});
  };
  for (const auto& [name, o] : scene.objects) {
    if (name != o.name) error(name, "object key does not match its name '" + o.name + "'");
    if (!o.parent.empty() && !scene.objects.count(o.parent)) error(name, "unresolved parent '" + o.parent + "'");
    if (!o.model.empty() && !scene.find_model(o.model)) error(name, "unknown model '" + o.model + "'");
    if (o.kind == ObjectKind::Volume) {
      if (!o.volume) error(name, "volume has no source descriptor");
      else if (o.volume->count <= 0) error(name, "volume has no slices");
      else if (!(o.volume->spacing.minCoeff() > 0.0)) error(name, "volume spacing must be positive");
    }
    if (o.kind == ObjectKind::Camera) {
      if (!o.camera) {
        error(name, "camera has no frustum");
      } else {
        try {
          o.camera->frustum.validate();
        } catch (const Error& e) {
          error(name, e.what());
        }
        if (o.camera->baseline < 0.0) error(name, "camera baseline must be >= 0");
      }
    }
    if (o.body && !(o.body->radius > 0.0)) error(name, "body radius must be positive");
    if (!is_finite(o.pose)) error(name, "pose is not finite");
    if (!scene.styles.count(name)) error(name, "no effective render style");
  }
  for (const auto& [child, parent] : scene.parent_edges) {
    std::set<std::string> seen{child};
    std::string cur = child;
    while (true) {
      auto it = scene.parent_edges.find(cur);
      if (it == scene.parent_edges.end()) break;
      cur = it->second;
      if (!seen.insert(cur).second) {
        error(child, "cyclic parent chain");
        break;
      }
    }
    (void)parent;
  }
  for (const auto& p : scene.plugins) {
    if (!plugin_registered(p.name)) error(p.target, "unknown plugin '" + p.name + "'");
    if (p.scope == Scope::Object || p.scope == Scope::Model) {
      if (p.target.empty()) {
        error("", "plugin target required (" + p.name + ")");
      } else if (p.scope == Scope::Object && !scene.objects.count(p.target)) {
        error(p.target, "plugin '" + p.name + "' targets unknown object");
      } else if (p.scope == Scope::Model && !scene.find_model(p.target)) {
        error(p.target, "plugin '" + p.name + "' targets unknown model");
      }
    }
  }
  for (const auto& [name, _] : scene.styles)
    if (!scene.objects.count(name)) error(name, "style assigned to unknown object");
  for (const auto& d : scene.input_devices) {
    if (d.channel != "control_drill" && d.channel != "control_camera")
      error(d.target, "input device '" + d.name + "' uses unknown channel '" + d.channel + "'");
    if (!scene.objects.count(d.target)) error(d.target, "input device '" + d.name + "' targets unknown object");
  }
  return out;
}

// ---------------------------------------------------------------- writing

namespace {

void emit_params(YAML::Emitter& out, const ParamMap& params) {
  out << YAML::BeginMap;
  for (const auto& [k, v] : params) out << YAML::Key << k << YAML::Value << YAML::DoubleQuoted << v;
  out << YAML::EndMap;
}

void emit_style(YAML::Emitter& out, const RenderStyleSpec& s) {
  out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << s.style_name;
  if (!s.params.empty()) {
    out << YAML::Key << "params" << YAML::Value;
    emit_params(out, s.params);
  }
  out << YAML::EndMap;
}

void emit_styles(YAML::Emitter& out, const std::vector<RenderStyleSpec>& styles) {
  if (styles.empty()) return;
  out << YAML::Key << "styles" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : styles) emit_style(out, s);
  out << YAML::EndSeq;
}

void emit_volume_source(YAML::Emitter& out, const VolumeSource& v) {
  out << YAML::BeginMap;
  out << YAML::Key << "directory" << YAML::Value << v.directory.string();
  out << YAML::Key << "prefix" << YAML::Value << YAML::DoubleQuoted << v.prefix;
  out << YAML::Key << "count" << YAML::Value << v.count;
  out << YAML::Key << "format" << YAML::Value << v.format;
  out << YAML::Key << "spacing" << YAML::Value;
  yamlu::emit_vec3(out, v.spacing);
  out << YAML::Key << "origin" << YAML::Value;
  yamlu::emit_pose(out, v.origin);
  out << YAML::Key << "label_map" << YAML::Value << YAML::BeginMap;
  for (const auto& [color, e] : v.label_map) {
    out << YAML::Key << YAML::DoubleQuoted << color << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key
        << "label_id" << YAML::Value << e.label_id << YAML::Key << "anatomy" << YAML::Value << YAML::DoubleQuoted
        << e.anatomy << YAML::EndMap;
  }
  out << YAML::EndMap << YAML::EndMap;
}

void emit_drill(YAML::Emitter& out, const DrillConfig& d) {
  out << YAML::BeginMap;
  out << YAML::Key << "tip_radius" << YAML::Value << d.tip_radius;
  out << YAML::Key << "shaft_radius" << YAML::Value << d.shaft_radius;
  out << YAML::Key << "shaft_count" << YAML::Value << d.shaft_count;
  out << YAML::Key << "shaft_start" << YAML::Value << d.shaft_start;
  out << YAML::Key << "shaft_spacing" << YAML::Value << d.shaft_spacing;
  out << YAML::Key << "shaft_axis" << YAML::Value;
  yamlu::emit_vec3(out, d.shaft_axis);
  out << YAML::Key << "stiffness" << YAML::Value << d.stiffness;
  out << YAML::Key << "max_force" << YAML::Value << d.max_force;
  out << YAML::Key << "epsilon" << YAML::Value << d.epsilon;
  out << YAML::Key << "contact_tolerance" << YAML::Value << d.contact_tolerance;
  out << YAML::Key << "slide_iterations" << YAML::Value << d.slide_iterations;
  out << YAML::Key << "render_length" << YAML::Value << d.render_length;
  out << YAML::EndMap;
}

void emit_object(YAML::Emitter& out, const ObjectSpec& o) {
  out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << o.name;
  if (!o.parent.empty()) out << YAML::Key << "parent" << YAML::Value << YAML::DoubleQuoted << o.parent;
  out << YAML::Key << "pose" << YAML::Value;
  yamlu::emit_pose(out, o.pose);
  if (o.style) {
    out << YAML::Key << "style" << YAML::Value;
    emit_style(out, *o.style);
  }
  if (o.camera) {
    const Frustum& f = o.camera->frustum;
    out << YAML::Key << "near" << YAML::Value << f.near_plane << YAML::Key << "far" << YAML::Value << f.far_plane
        << YAML::Key << "fva" << YAML::Value << f.fva << YAML::Key << "width" << YAML::Value << f.width << YAML::Key
        << "height" << YAML::Value << f.height << YAML::Key << "baseline" << YAML::Value << o.camera->baseline;
  }
  if (o.light) {
    out << YAML::Key << "direction" << YAML::Value;
    yamlu::emit_vec3(out, o.light->direction);
    out << YAML::Key << "ambient" << YAML::Value << o.light->ambient;
  }
  if (o.volume) {
    out << YAML::Key << "source" << YAML::Value;
    emit_volume_source(out, *o.volume);
  }
  if (o.kind == ObjectKind::RigidBody || o.kind == ObjectKind::Sensor || o.kind == ObjectKind::Actuator) {
    out << YAML::Key << "kind" << YAML::Value << to_string(o.kind);
    if (o.body) {
      out << YAML::Key << "shape" << YAML::Value << (o.body->shape == BodyShape::Sphere ? "sphere" : "capsule");
      out << YAML::Key << "radius" << YAML::Value << o.body->radius << YAML::Key << "length" << YAML::Value
          << o.body->length << YAML::Key << "color" << YAML::Value << YAML::DoubleQuoted << color_hex(o.body->color);
    }
    if (o.drill) {
      out << YAML::Key << "drill" << YAML::Value;
      emit_drill(out, *o.drill);
    }
  }
  out << YAML::EndMap;
}

void emit_objects(YAML::Emitter& out, const std::vector<const ObjectSpec*>& objs) {
  const std::pair<const char*, std::vector<ObjectKind>> sections[] = {
      {"cameras", {ObjectKind::Camera}},
      {"lights", {ObjectKind::Light}},
      {"bodies", {ObjectKind::RigidBody, ObjectKind::Sensor, ObjectKind::Actuator}},
      {"volumes", {ObjectKind::Volume}}};
  for (const auto& [key, kinds] : sections) {
    std::vector<const ObjectSpec*> sel;
    for (const ObjectSpec* o : objs)
      if (std::find(kinds.begin(), kinds.end(), o->kind) != kinds.end()) sel.push_back(o);
    if (sel.empty()) continue;
    out << YAML::Key << key << YAML::Value << YAML::BeginSeq;
    for (const ObjectSpec* o : sel) emit_object(out, *o);
    out << YAML::EndSeq;
  }
}

void write_text(const fs::path& path, const YAML::Emitter& out) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f << out.c_str() << "\n";
}

void configure(YAML::Emitter& out) {
  out.SetDoublePrecision(17);
  out.SetFloatPrecision(9);
}

}  // namespace

fs::path write_scene(const SceneDescription& scene, const fs::path& dir) {
  fs::create_directories(dir);
  {
    YAML::Emitter out;
    configure(out);
    out << YAML::BeginMap << YAML::Key << "gravity" << YAML::Value;
    yamlu::emit_vec3(out, scene.gravity);
    emit_styles(out, scene.world_styles);
    std::vector<const ObjectSpec*> objs;
    for (const auto& [_, o] : scene.objects)
      if (o.model.empty()) objs.push_back(&o);
    emit_objects(out, objs);
    out << YAML::EndMap;
    write_text(dir / "world.yaml", out);
  }
  {
    YAML::Emitter out;
    configure(out);
    out << YAML::BeginMap << YAML::Key << "devices" << YAML::Value << YAML::BeginSeq;
    for (const auto& d : scene.input_devices)
      out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << d.name << YAML::Key << "channel" << YAML::Value
          << d.channel << YAML::Key << "target" << YAML::Value << d.target << YAML::EndMap;
    out << YAML::EndSeq << YAML::EndMap;
    write_text(dir / "input_devices.yaml", out);
  }
  std::vector<std::string> model_files;
  for (std::size_t i = 0; i < scene.models.size(); ++i) {
    const ModelSpec& m = scene.models[i];
    YAML::Emitter out;
    configure(out);
    out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << m.name;
    emit_styles(out, m.styles);
    std::vector<const ObjectSpec*> objs;
    for (const auto& n : m.objects) objs.push_back(&scene.object(n));
    emit_objects(out, objs);
    if (!m.joints.empty()) {
      out << YAML::Key << "joints" << YAML::Value << YAML::BeginSeq;
      for (const auto& j : m.joints)
        out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << j.name << YAML::Key << "parent" << YAML::Value
            << j.parent << YAML::Key << "child" << YAML::Value << j.child << YAML::Key << "type" << YAML::Value
            << j.type << YAML::EndMap;
      out << YAML::EndSeq;
    }
    out << YAML::EndMap;
    model_files.push_back("model_" + std::to_string(i) + ".yaml");
    write_text(dir / model_files.back(), out);
  }
  YAML::Emitter out;
    configure(out);
  out << YAML::BeginMap << YAML::Key << "world" << YAML::Value << "world.yaml" << YAML::Key << "input_devices"
      << YAML::Value << "input_devices.yaml" << YAML::Key << "models" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : model_files) out << f;
  out << YAML::EndSeq;
  if (!scene.plugins.empty()) {
    out << YAML::Key << "plugins" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : scene.plugins) {
      out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << p.name << YAML::Key << "scope" << YAML::Value
          << to_string(p.scope) << YAML::Key << "target" << YAML::Value << YAML::DoubleQuoted << p.target;
      if (!p.params.empty()) {
        out << YAML::Key << "params" << YAML::Value;
        emit_params(out, p.params);
      }
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
  const fs::path launch = dir / "launch.yaml";
  write_text(launch, out);
  return launch;
}

VolumeSource read_volume_descriptor(const fs::path& path) {
  const YAML::Node root = yamlu::load_file(path);
  std::vector<std::string> ignored;
  return parse_volume_source(root, path.parent_path(), path.string(), &ignored);
}

void write_volume_descriptor(const VolumeSource& source, const fs::path& path) {
  VolumeSource rel = source;
  // keep the descriptor relocatable together with its slices
  rel.directory = source.directory.lexically_relative(path.parent_path());
  if (rel.directory.empty() || source.directory.is_relative()) rel.directory = source.directory;
  YAML::Emitter out;
  configure(out);
  emit_volume_source(out, rel);
  write_text(path, out);
}

}  // namespace drillsim
