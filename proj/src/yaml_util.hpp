#pragma once
// Shared YAML plumbing for the scene and trajectory readers.

#include "drillsim/error.hpp"
#include "drillsim/math.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace drillsim::yamlu {

std::string where(const YAML::Node& node, const std::string& file);

/// Parses a whole file, rejecting duplicate mapping keys anywhere in it.
YAML::Node load_file(const std::filesystem::path& path);
YAML::Node load_string(const std::string& text, const std::string& name);

/// Tracks which keys of a mapping were consumed so leftovers become warnings.
class MapReader {
 public:
  MapReader(const YAML::Node& node, std::string context, std::string file, std::vector<std::string>* warnings);

  bool has(const std::string& key) const;
  YAML::Node get(const std::string& key);
  YAML::Node require(const std::string& key);

  template <typename T>
  T value(const std::string& key, const T& fallback) {
    const YAML::Node n = get(key);
    return n ? as<T>(n) : fallback;
  }
  template <typename T>
  T required(const std::string& key) {
    return as<T>(require(key));
  }
  template <typename T>
  T as(const YAML::Node& n) const {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw Error(ErrorCode::MalformedDocument, where(n, file_) + ": bad value in " + context_);
    }
  }

  /// Reports keys that were never read.
  void finish();
  const std::string& file() const { return file_; }
  const std::string& context() const { return context_; }

 private:
  YAML::Node node_;
  std::string context_;
  std::string file_;
  std::vector<std::string>* warnings_;
  std::set<std::string> used_;
};

Vec3 parse_vec3(const YAML::Node& node, const std::string& context, const std::string& file,
                std::vector<std::string>* warnings);
/// position {x,y,z} plus orientation {w,x,y,z} or {r,p,y}; quaternion wins if both.
Pose parse_pose(const YAML::Node& node, const std::string& context, const std::string& file,
                std::vector<std::string>* warnings);

void emit_vec3(YAML::Emitter& out, const Vec3& v);
void emit_pose(YAML::Emitter& out, const Pose& p);

}  // namespace drillsim::yamlu
