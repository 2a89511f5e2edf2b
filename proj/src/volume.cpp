#include "drillsim/volume.hpp"

#include "drillsim/error.hpp"
#include "drillsim/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <unordered_map>

namespace drillsim {

std::filesystem::path VolumeSource::slice_path(int k) const {
  return directory / (prefix + std::to_string(k) + "." + format);
}

Rgb8 parse_color_hex(const std::string& text) {
  std::string s = text;
  if (!s.empty() && s[0] == '#') s = s.substr(1);
  else if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s = s.substr(2);
  if (s.size() != 6 || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c); }))
    throw Error(ErrorCode::InvalidArgument, "bad color '" + text + "'");
  const unsigned long v = std::stoul(s, nullptr, 16);
  return {static_cast<std::uint8_t>((v >> 16) & 0xFF), static_cast<std::uint8_t>((v >> 8) & 0xFF),
          static_cast<std::uint8_t>(v & 0xFF)};
}

std::string color_hex(Rgb8 c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

VoxelVolume::VoxelVolume(VoxelDims dims, Vec3 spacing, Pose origin)
    : dims_(dims), spacing_(spacing) {
  if (dims.x < 1 || dims.y < 1 || dims.z < 1)
    throw Error(ErrorCode::InvalidArgument, "volume dims must be >= 1");
  if (!(spacing.minCoeff() > 0.0)) throw Error(ErrorCode::InvalidArgument, "volume spacing must be > 0");
  set_origin(origin);
  intensity_.assign(dims.count(), 0);
  label_.assign(dims.count(), 0);
  brick_dims_ = {(dims.x + kBrickSize - 1) / kBrickSize, (dims.y + kBrickSize - 1) / kBrickSize,
                 (dims.z + kBrickSize - 1) / kBrickSize};
  brick_counts_.assign(brick_dims_.count(), 0);
}

void VoxelVolume::set_origin(const Pose& origin) {
  origin_ = origin.normalized();
  local_from_world_ = origin_.inverse();
}

void VoxelVolume::adjust_brick(int x, int y, int z, int delta) {
  const std::size_t b = static_cast<std::size_t>(x >> kBrickShift) +
                        static_cast<std::size_t>(brick_dims_.x) *
                            ((y >> kBrickShift) + static_cast<std::size_t>(brick_dims_.y) * (z >> kBrickShift));
  brick_counts_[b] = static_cast<std::uint32_t>(static_cast<std::int64_t>(brick_counts_[b]) + delta);
  occupied_count_ = static_cast<std::uint64_t>(static_cast<std::int64_t>(occupied_count_) + delta);
}

void VoxelVolume::set_voxel(int x, int y, int z, std::uint8_t intensity, std::uint8_t label) {
  if ((intensity == 0) != (label == 0))
    throw Error(ErrorCode::InvalidArgument, "voxel intensity and label must be zero together");
  const std::size_t i = linear_index(x, y, z);
  const bool was = intensity_[i] > 0;
  intensity_[i] = intensity;
  label_[i] = label;
  const bool now = intensity > 0;
  if (was != now) adjust_brick(x, y, z, now ? 1 : -1);
}

std::optional<VoxelIndex> VoxelVolume::locate_local(const Vec3& local) const {
  int idx[3];
  const int n[3] = {dims_.x, dims_.y, dims_.z};
  for (int a = 0; a < 3; ++a) {
    const double t = local[a] / spacing_[a];
    if (!(t > 0.0) || !(t <= n[a])) return std::nullopt;
    idx[a] = static_cast<int>(std::ceil(t)) - 1;
  }
  return VoxelIndex{idx[0], idx[1], idx[2]};
}

SampleResult VoxelVolume::sample_local(const Vec3& local) const {
  const auto v = locate_local(local);
  if (!v) return {};
  const std::size_t i = linear_index(v->x, v->y, v->z);
  return {intensity_[i] > 0, label_[i]};
}

SampleResult VoxelVolume::sample(const Vec3& world) const { return sample_local(local_from_world(world)); }

double VoxelVolume::interpolate_local(const Vec3& local) const {
  const double u[3] = {local.x() / spacing_.x() - 0.5, local.y() / spacing_.y() - 0.5,
                       local.z() / spacing_.z() - 0.5};
  int i0[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    const double fl = std::floor(u[a]);
    i0[a] = static_cast<int>(fl);
    f[a] = u[a] - fl;
  }
  auto value = [&](int x, int y, int z) -> double {
    if (!in_bounds(x, y, z)) return 0.0;
    return intensity_[linear_index(x, y, z)] / 255.0;
  };
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? f[2] : 1.0 - f[2];
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? f[1] : 1.0 - f[1];
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? f[0] : 1.0 - f[0];
        acc += wx * wy * wz * value(i0[0] + dx, i0[1] + dy, i0[2] + dz);
      }
    }
  }
  return acc;
}

Vec3 VoxelVolume::shading_normal_local(const Vec3& local, const Vec3& fallback_local) const {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 step = Vec3::Zero();
    step[a] = spacing_[a];
    g[a] = (interpolate_local(local + step) - interpolate_local(local - step)) / (2.0 * spacing_[a]);
  }
  const double norm = g.norm();
  if (norm < 1e-9) return fallback_local;
  return -g / norm;
}

Vec3 VoxelVolume::gradient_normal_local(const Vec3& local, const Vec3& fallback_local) const {
  // Central differences at every lattice offset within kNormalRadius voxels,
  // averaged with separable tent weights. A bare one-voxel difference follows
  // the staircase of a binary volume; the average follows the smooth surface.
  constexpr int R = kNormalRadius;
  constexpr int S = 2 * R + 3;  // sample lattice spans offsets -R-1 .. R+1
  std::array<double, S * S * S> v;
  for (int k = 0; k < S; ++k)
    for (int j = 0; j < S; ++j)
      for (int i = 0; i < S; ++i) {
        const Vec3 o((i - R - 1) * spacing_.x(), (j - R - 1) * spacing_.y(), (k - R - 1) * spacing_.z());
        v[i + S * (j + S * k)] = interpolate_local(local + o);
      }
  const auto at = [&](int i, int j, int k) { return v[(i + R + 1) + S * ((j + R + 1) + S * (k + R + 1))]; };
  const auto tent = [](int o) { return static_cast<double>(R + 1 - std::abs(o)); };
  const double total = std::pow(static_cast<double>((R + 1) * (R + 1)), 3);
  Vec3 g = Vec3::Zero();
  for (int k = -R; k <= R; ++k)
    for (int j = -R; j <= R; ++j)
      for (int i = -R; i <= R; ++i) {
        const double w = tent(i) * tent(j) * tent(k);
        g.x() += w * (at(i + 1, j, k) - at(i - 1, j, k));
        g.y() += w * (at(i, j + 1, k) - at(i, j - 1, k));
        g.z() += w * (at(i, j, k + 1) - at(i, j, k - 1));
      }
  g = g.cwiseQuotient(2.0 * spacing_) / total;
  const double norm = g.norm();
  if (norm < 1e-9) return fallback_local;
  return -g / norm;
}

Vec3 VoxelVolume::gradient_normal(const Vec3& world, const Vec3& fallback) const {
  const Vec3 local = local_from_world(world);
  const Vec3 fallback_local = local_from_world_.rotate(fallback);
  return origin_.rotate(gradient_normal_local(local, fallback_local));
}

VoxelEdit VoxelVolume::remove_colliding_voxels(const Vec3& center_world, double radius, std::uint64_t tick) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "removal radius must be > 0");
  VoxelEdit edit;
  edit.tick = tick;
  const Vec3 c = local_from_world(center_world);
  const double r2 = radius * radius * (1.0 + 1e-9);
  int lo[3], hi[3];
  const int n[3] = {dims_.x, dims_.y, dims_.z};
  for (int a = 0; a < 3; ++a) {
    const double first = std::ceil((c[a] - radius) / spacing_[a] - 0.5 - 1e-9);
    const double last = std::floor((c[a] + radius) / spacing_[a] - 0.5 + 1e-9);
    lo[a] = static_cast<int>(std::max(first, 0.0));
    hi[a] = static_cast<int>(std::min(last, static_cast<double>(n[a] - 1)));
    if (first > n[a] - 1 || last < 0) return edit;
  }
  for (int z = lo[2]; z <= hi[2]; ++z) {
    const double dz = (z + 0.5) * spacing_.z() - c.z();
    for (int y = lo[1]; y <= hi[1]; ++y) {
      const double dy = (y + 0.5) * spacing_.y() - c.y();
      for (int x = lo[0]; x <= hi[0]; ++x) {
        const std::size_t i = linear_index(x, y, z);
        if (intensity_[i] == 0) continue;
        const double dx = (x + 0.5) * spacing_.x() - c.x();
        if (dx * dx + dy * dy + dz * dz > r2) continue;
        edit.removed.push_back({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                                static_cast<std::uint32_t>(z), intensity_[i], label_[i]});
        intensity_[i] = 0;
        label_[i] = 0;
        adjust_brick(x, y, z, -1);
      }
    }
  }
  return edit;
}

void VoxelVolume::apply(const VoxelEdit& edit) {
  for (const auto& v : edit.removed) {
    const int x = static_cast<int>(v.x), y = static_cast<int>(v.y), z = static_cast<int>(v.z);
    if (!in_bounds(x, y, z)) throw Error(ErrorCode::InvalidArgument, "voxel edit out of bounds");
    if (occupied(x, y, z)) set_voxel(x, y, z, 0, 0);
  }
}

void VoxelVolume::revert(const VoxelEdit& edit) {
  for (auto it = edit.removed.rbegin(); it != edit.removed.rend(); ++it) {
    const int x = static_cast<int>(it->x), y = static_cast<int>(it->y), z = static_cast<int>(it->z);
    if (!in_bounds(x, y, z)) throw Error(ErrorCode::InvalidArgument, "voxel edit out of bounds");
    set_voxel(x, y, z, it->prior_intensity, it->prior_label);
  }
}

bool operator==(const VoxelVolume& a, const VoxelVolume& b) {
  return a.dims_ == b.dims_ && a.spacing_ == b.spacing_ && bit_equal(a.origin_, b.origin_) &&
         a.intensity_ == b.intensity_ && a.label_ == b.label_ && a.label_table_ == b.label_table_;
}

namespace {

std::uint32_t pack_rgb(Rgb8 c) { return (std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b; }

}  // namespace

VoxelVolume load_volume(const VolumeSource& source) {
  if (source.count < 1) throw Error(ErrorCode::InvalidArgument, "volume source lists no slices");
  if (source.format != "png" && source.format != "jpeg")
    throw Error(ErrorCode::UnsupportedEncoding, "slice format must be png or jpeg");

  std::unordered_map<std::uint32_t, LabelEntry> lookup;
  std::map<std::uint8_t, LabelInfo> table;
  for (const auto& [hex, entry] : source.label_map) {
    const Rgb8 c = parse_color_hex(hex);
    if (entry.label_id < 0 || entry.label_id > 255)
      throw Error(ErrorCode::InvalidArgument, "label id out of range for " + hex);
    lookup[pack_rgb(c)] = entry;
    if (entry.label_id > 0) table[static_cast<std::uint8_t>(entry.label_id)] = {entry.anatomy, c};
  }
  lookup.try_emplace(0u, LabelEntry{0, "background"});

  std::optional<VoxelVolume> volume;
  for (int k = 0; k < source.count; ++k) {
    const auto path = source.slice_path(k);
    if (!std::filesystem::exists(path))
      throw Error(ErrorCode::MissingSlice, "slice " + std::to_string(k) + " (" + path.string() + ")");
    const RgbImage img = read_image(path);
    if (!volume) {
      volume.emplace(VoxelDims{img.width, img.height, source.count}, source.spacing, source.origin);
    } else if (img.width != volume->dims().x || img.height != volume->dims().y) {
      throw Error(ErrorCode::InconsistentSliceSize, "slice " + std::to_string(k) + " is " +
                                                        std::to_string(img.width) + "x" + std::to_string(img.height));
    }
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const Rgb8 c = img.at(x, y);
        const auto it = lookup.find(pack_rgb(c));
        if (it == lookup.end())
          throw Error(ErrorCode::UnmappedColor, color_hex(c) + " in slice " + std::to_string(k) + " at pixel (" +
                                                    std::to_string(x) + ", " + std::to_string(y) + ")");
        const int id = it->second.label_id;
        if (id > 0) volume->set_voxel(x, y, k, 255, static_cast<std::uint8_t>(id));
      }
    }
  }
  for (auto& [id, info] : table) volume->set_label_info(id, info);
  return std::move(*volume);
}

void write_slice_stack(const VoxelVolume& volume, const VolumeSource& source) {
  std::filesystem::create_directories(source.directory);
  const auto& dims = volume.dims();
  for (int z = 0; z < dims.z; ++z) {
    RgbImage img(dims.x, dims.y);
    for (int y = 0; y < dims.y; ++y) {
      for (int x = 0; x < dims.x; ++x) {
        const std::uint8_t id = volume.label(x, y, z);
        if (id == 0) continue;
        const auto it = volume.label_table().find(id);
        if (it == volume.label_table().end())
          throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(id) + " has no table entry");
        img.set(x, y, it->second.color);
      }
    }
    if (source.format == "jpeg") write_jpeg(source.slice_path(z), img);
    else write_png(source.slice_path(z), img);
  }
}

}  // namespace drillsim
