#pragma once

#include "drillsim/math.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace drillsim {

struct VoxelDims {
  int x = 1, y = 1, z = 1;
  std::size_t count() const { return static_cast<std::size_t>(x) * y * z; }
  friend bool operator==(const VoxelDims&, const VoxelDims&) = default;
};

struct VoxelIndex {
  int x = 0, y = 0, z = 0;
  friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
};

struct LabelInfo {
  std::string anatomy;
  Rgb8 color;
  friend bool operator==(const LabelInfo&, const LabelInfo&) = default;
};

struct LabelEntry {
  int label_id = 0;
  std::string anatomy;
  friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

/// Where a segmented slice stack lives and how to interpret it. Slice k is read
/// from `directory / (prefix + k + "." + format)`.
struct VolumeSource {
  std::filesystem::path directory;
  std::string prefix;
  int count = 0;
  std::string format = "png";  ///< "png" or "jpeg"
  Vec3 spacing = Vec3::Constant(0.001);
  Pose origin;
  std::map<std::string, LabelEntry> label_map;  ///< "#rrggbb" -> label

  std::filesystem::path slice_path(int k) const;
};

/// Parses "#RRGGBB", "RRGGBB" or "0xRRGGBB". Throws Error(InvalidArgument).
Rgb8 parse_color_hex(const std::string& text);
std::string color_hex(Rgb8 c);

struct SampleResult {
  bool occupied = false;
  std::uint8_t label = 0;
};

struct RemovedVoxel {
  std::uint32_t x = 0, y = 0, z = 0;
  std::uint8_t prior_intensity = 0;
  std::uint8_t prior_label = 0;
  friend bool operator==(const RemovedVoxel&, const RemovedVoxel&) = default;
};

/// Voxels cleared during one tick, with enough state to undo them.
struct VoxelEdit {
  std::uint64_t tick = 0;
  std::vector<RemovedVoxel> removed;

  bool empty() const { return removed.empty(); }
  friend bool operator==(const VoxelEdit&, const VoxelEdit&) = default;
};

/// Dense segmented volume. Storage is x-fastest. Voxel (i, j, k) occupies the
/// local box [i, i+1] x [j, j+1] x [k, k+1] scaled by spacing; origin is the world
/// pose of the (0, 0, 0) corner. Intensity is 8-bit (255 = fully occupied) and is
/// zero exactly where the label is zero.
class VoxelVolume {
 public:
  static constexpr int kBrickShift = 3;
  static constexpr int kBrickSize = 1 << kBrickShift;
  static constexpr int kNormalRadius = 3;

  VoxelVolume() : VoxelVolume(VoxelDims{}, Vec3::Constant(0.001), Pose{}) {}
  VoxelVolume(VoxelDims dims, Vec3 spacing, Pose origin);

  const VoxelDims& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  const Pose& origin() const { return origin_; }
  void set_origin(const Pose& origin);
  double min_spacing() const { return spacing_.minCoeff(); }
  Vec3 extent() const { return spacing_.cwiseProduct(Vec3(dims_.x, dims_.y, dims_.z)); }

  std::size_t linear_index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) + static_cast<std::size_t>(dims_.x) * (y + static_cast<std::size_t>(dims_.y) * z);
  }
  bool in_bounds(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.x && y < dims_.y && z < dims_.z;
  }
  std::uint8_t intensity(int x, int y, int z) const { return intensity_[linear_index(x, y, z)]; }
  std::uint8_t label(int x, int y, int z) const { return label_[linear_index(x, y, z)]; }
  bool occupied(int x, int y, int z) const { return intensity_[linear_index(x, y, z)] > 0; }

  /// Throws Error(InvalidArgument) if intensity and label disagree on emptiness.
  void set_voxel(int x, int y, int z, std::uint8_t intensity, std::uint8_t label);

  const std::map<std::uint8_t, LabelInfo>& label_table() const { return label_table_; }
  void set_label_info(std::uint8_t id, LabelInfo info) { label_table_[id] = std::move(info); }

  Vec3 local_from_world(const Vec3& world) const { return local_from_world_.transform(world); }
  Vec3 world_from_local(const Vec3& local) const { return origin_.transform(local); }
  Vec3 voxel_center_local(int x, int y, int z) const {
    return {(x + 0.5) * spacing_.x(), (y + 0.5) * spacing_.y(), (z + 0.5) * spacing_.z()};
  }
  Vec3 voxel_center_world(int x, int y, int z) const { return world_from_local(voxel_center_local(x, y, z)); }

  /// Nearest voxel center; a coordinate exactly on a shared face resolves to the
  /// lower index. Returns nullopt outside the grid.
  std::optional<VoxelIndex> locate_local(const Vec3& local) const;

  SampleResult sample(const Vec3& world) const;
  SampleResult sample_local(const Vec3& local) const;

  /// Trilinear interpolation of intensity in [0, 1]; zero outside the grid.
  double interpolate_local(const Vec3& local) const;

  /// Surface normal: negated, normalized gradient of the interpolated intensity
  /// (world frame), from central differences averaged over a tent-weighted
  /// neighbourhood of kNormalRadius voxels. Returns `fallback` when the gradient
  /// vanishes.
  Vec3 gradient_normal(const Vec3& world, const Vec3& fallback) const;
  Vec3 gradient_normal_local(const Vec3& local, const Vec3& fallback_local) const;
  /// Single central difference; cheap enough for per-pixel shading.
  Vec3 shading_normal_local(const Vec3& local, const Vec3& fallback_local) const;

  /// Clears every occupied voxel whose center lies within `radius` of `center`.
  VoxelEdit remove_colliding_voxels(const Vec3& center_world, double radius, std::uint64_t tick);

  /// Re-applies a recorded removal. Voxels already empty are left alone.
  void apply(const VoxelEdit& edit);
  /// Restores the prior contents recorded in the edit.
  void revert(const VoxelEdit& edit);

  std::uint64_t occupied_count() const { return occupied_count_; }

  VoxelDims brick_dims() const { return brick_dims_; }
  bool brick_empty(int bx, int by, int bz) const {
    return brick_counts_[bx + static_cast<std::size_t>(brick_dims_.x) * (by + static_cast<std::size_t>(brick_dims_.y) * bz)] == 0;
  }

  const std::vector<std::uint8_t>& intensity_data() const { return intensity_; }
  const std::vector<std::uint8_t>& label_data() const { return label_; }

  /// Grid contents, geometry and label table all match exactly.
  friend bool operator==(const VoxelVolume& a, const VoxelVolume& b);

 private:
  void adjust_brick(int x, int y, int z, int delta);

  VoxelDims dims_;
  Vec3 spacing_;
  Pose origin_;
  Pose local_from_world_;
  std::vector<std::uint8_t> intensity_;
  std::vector<std::uint8_t> label_;
  std::map<std::uint8_t, LabelInfo> label_table_;
  VoxelDims brick_dims_;
  std::vector<std::uint32_t> brick_counts_;
  std::uint64_t occupied_count_ = 0;
};

/// Reads the slice stack described by `source`. Black pixels are background
/// unless the label map assigns them; any other unmapped color is an error.
VoxelVolume load_volume(const VolumeSource& source);

/// Writes one PNG per z-plane (colors from the label table) into source.directory.
void write_slice_stack(const VoxelVolume& volume, const VolumeSource& source);

}  // namespace drillsim
