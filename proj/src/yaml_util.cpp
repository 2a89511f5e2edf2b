#include "yaml_util.hpp"

#include <fstream>
#include <sstream>

namespace drillsim::yamlu {

namespace {

void check_duplicates(const YAML::Node& node, const std::string& file) {
  if (node.IsMap()) {
    std::set<std::string> seen;
    for (const auto& kv : node) {
      const std::string key = kv.first.Scalar();
      if (!seen.insert(key).second)
        throw Error(ErrorCode::DuplicateKey, where(kv.first, file) + ": duplicate key '" + key + "'");
      check_duplicates(kv.second, file);
    }
  } else if (node.IsSequence()) {
    for (const auto& item : node) check_duplicates(item, file);
  }
}

YAML::Node parse(std::istream& in, const std::string& name) {
  YAML::Node root;
  try {
    root = YAML::Load(in);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::MalformedDocument, name + ":" + std::to_string(e.mark.line + 1) + ":" +
                                                  std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw Error(ErrorCode::MalformedDocument, name + ": top level must be a mapping");
  check_duplicates(root, name);
  return root;
}

/// A default Node is a defined null, which tests true; this one tests false.
YAML::Node undefined() { return YAML::Node(YAML::NodeType::Undefined); }

}  // namespace

std::string where(const YAML::Node& node, const std::string& file) {
  const YAML::Mark m = node.Mark();
  if (m.is_null()) return file;
  return file + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
}

YAML::Node load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  return parse(in, path.string());
}

YAML::Node load_string(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  return parse(in, name);
}

MapReader::MapReader(const YAML::Node& node, std::string context, std::string file,
                     std::vector<std::string>* warnings)
    : node_(node), context_(std::move(context)), file_(std::move(file)), warnings_(warnings) {
  if (node_ && !node_.IsNull() && !node_.IsMap())
    throw Error(ErrorCode::MalformedDocument, where(node_, file_) + ": " + context_ + " must be a mapping");
}

bool MapReader::has(const std::string& key) const {
  const YAML::Node& cnode = node_;
  return cnode.IsMap() && cnode[key];
}

YAML::Node MapReader::get(const std::string& key) {
  if (!node_.IsMap()) return undefined();
  used_.insert(key);
  const YAML::Node& cnode = node_;
  const YAML::Node n = cnode[key];
  return n && !n.IsNull() ? n : undefined();
}

YAML::Node MapReader::require(const std::string& key) {
  YAML::Node n = get(key);
  if (!n) throw Error(ErrorCode::MissingRequiredField, where(node_, file_) + ": " + context_ + " requires '" + key + "'");
  return n;
}

void MapReader::finish() {
  if (!node_.IsMap() || !warnings_) return;
  for (const auto& kv : node_) {
    const std::string key = kv.first.Scalar();
    if (!used_.count(key)) warnings_->push_back(where(kv.first, file_) + ": ignoring unknown key '" + key + "' in " + context_);
  }
}

Vec3 parse_vec3(const YAML::Node& node, const std::string& context, const std::string& file,
                std::vector<std::string>* warnings) {
  if (node.IsSequence() && node.size() == 3) {
    MapReader dummy(YAML::Node(), context, file, nullptr);
    return {dummy.as<double>(node[0]), dummy.as<double>(node[1]), dummy.as<double>(node[2])};
  }
  MapReader r(node, context, file, warnings);
  Vec3 v(r.required<double>("x"), r.required<double>("y"), r.required<double>("z"));
  r.finish();
  return v;
}

Pose parse_pose(const YAML::Node& node, const std::string& context, const std::string& file,
                std::vector<std::string>* warnings) {
  MapReader r(node, context, file, warnings);
  Pose p;
  if (const YAML::Node pos = r.get("position")) p.position = parse_vec3(pos, context + ".position", file, warnings);
  if (const YAML::Node ori = r.get("orientation")) {
    MapReader o(ori, context + ".orientation", file, warnings);
    const bool quat = o.has("w") || o.has("x") || o.has("y") || o.has("z");
    const bool euler = o.has("r") || o.has("p") || o.has("y");
    // "y" is ambiguous between the two forms; a quaternion needs w.
    if (o.has("w")) {
      Quat q(o.required<double>("w"), o.required<double>("x"), o.required<double>("y"), o.required<double>("z"));
      if (o.has("r") || o.has("p")) {
        o.get("r");
        o.get("p");
        if (warnings) warnings->push_back(where(ori, file) + ": " + context + " gives both quaternion and Euler angles; using the quaternion");
      }
      if (!(q.norm() > 0.0)) throw Error(ErrorCode::MalformedDocument, where(ori, file) + ": zero quaternion");
      p.orientation = canonical(q);
    } else if (euler) {
      const EulerXYZ e{o.value<double>("r", 0.0), o.value<double>("p", 0.0), o.value<double>("y", 0.0)};
      p.orientation = quat_from_euler(e);
    } else if (quat) {
      throw Error(ErrorCode::MissingRequiredField, where(ori, file) + ": quaternion requires 'w'");
    }
    o.finish();
  }
  r.finish();
  return p;
}

void emit_vec3(YAML::Emitter& out, const Vec3& v) {
  out << YAML::Flow << YAML::BeginMap << YAML::Key << "x" << YAML::Value << v.x() << YAML::Key << "y" << YAML::Value
      << v.y() << YAML::Key << "z" << YAML::Value << v.z() << YAML::EndMap;
}

void emit_pose(YAML::Emitter& out, const Pose& p) {
  out << YAML::BeginMap << YAML::Key << "position" << YAML::Value;
  emit_vec3(out, p.position);
  const Quat& q = p.orientation;
  out << YAML::Key << "orientation" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "w" << YAML::Value
      << q.w() << YAML::Key << "x" << YAML::Value << q.x() << YAML::Key << "y" << YAML::Value << q.y() << YAML::Key
      << "z" << YAML::Value << q.z() << YAML::EndMap << YAML::EndMap;
}

}  // namespace drillsim::yamlu
