#include "drillsim/haptics.hpp"

#include "drillsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace drillsim {

namespace {

struct VoxelRange {
  int lo[3];
  int hi[3];
  bool empty = false;
};

VoxelRange voxels_near(const VoxelVolume& volume, const Vec3& local, double radius) {
  VoxelRange r;
  const int n[3] = {volume.dims().x, volume.dims().y, volume.dims().z};
  for (int a = 0; a < 3; ++a) {
    const double s = volume.spacing()[a];
    r.lo[a] = std::max(0, static_cast<int>(std::ceil((local[a] - radius) / s - 0.5)));
    r.hi[a] = std::min(n[a] - 1, static_cast<int>(std::floor((local[a] + radius) / s - 0.5)));
    if (r.lo[a] > r.hi[a]) r.empty = true;
  }
  return r;
}

bool bricks_empty(const VoxelVolume& volume, const VoxelRange& r) {
  const int sh = VoxelVolume::kBrickShift;
  for (int bz = r.lo[2] >> sh; bz <= r.hi[2] >> sh; ++bz)
    for (int by = r.lo[1] >> sh; by <= r.hi[1] >> sh; ++by)
      for (int bx = r.lo[0] >> sh; bx <= r.hi[0] >> sh; ++bx)
        if (!volume.brick_empty(bx, by, bz)) return false;
  return true;
}

/// Closest occupied voxel center (local frame) within `radius`, if any.
std::optional<Vec3> nearest_occupied_center(const VoxelVolume& volume, const Vec3& local, double radius) {
  const VoxelRange r = voxels_near(volume, local, radius);
  if (r.empty || bricks_empty(volume, r)) return std::nullopt;
  double best = radius * radius;
  std::optional<Vec3> out;
  for (int z = r.lo[2]; z <= r.hi[2]; ++z)
    for (int y = r.lo[1]; y <= r.hi[1]; ++y)
      for (int x = r.lo[0]; x <= r.hi[0]; ++x) {
        if (!volume.occupied(x, y, z)) continue;
        const Vec3 c = volume.voxel_center_local(x, y, z);
        const double d2 = (c - local).squaredNorm();
        if (d2 <= best) {
          best = d2;
          out = c;
        }
      }
  return out;
}

struct MoveResult {
  Vec3 position;
  bool contact = false;
};

/// Advances a sphere from `start` toward `target`, stopping just before the
/// first colliding configuration.
MoveResult move_sphere(const VoxelVolume& volume, const Vec3& start, const Vec3& target, double radius,
                       const DrillConfig& config) {
  const Vec3 delta = target - start;
  const double len = delta.norm();
  if (len == 0.0) return {start, false};
  if (sphere_collides(volume, start, radius)) {
    // only reachable when a cursor is spawned inside tissue
    return {sphere_collides(volume, target, radius) ? start : target, false};
  }
  const double step = std::min(0.25 * volume.min_spacing(), 0.5 * radius);
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  double lo = 0.0;
  for (int j = 1; j <= n; ++j) {
    const double u = static_cast<double>(j) / n;
    if (!sphere_collides(volume, start + u * delta, radius)) {
      lo = u;
      continue;
    }
    double hi = u;
    const double tol = 0.25 * config.contact_tolerance / len;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (sphere_collides(volume, start + mid * delta, radius)) hi = mid;
      else lo = mid;
    }
    return {start + lo * delta, true};
  }
  return {target, false};
}

Vec3 contact_normal(const VoxelVolume& volume, const Vec3& world, double radius, double tolerance,
                    const Vec3& fallback) {
  const Vec3 local = volume.local_from_world(world);
  const auto center = nearest_occupied_center(volume, local, radius + 2.0 * tolerance + volume.min_spacing());
  if (!center) return fallback;
  Vec3 away = local - *center;
  const double len = away.norm();
  if (len == 0.0) return fallback;
  away /= len;
  // a point on the face of the contacted voxel, where the intensity gradient is defined
  const Vec3 surface = *center + away * (0.5 * volume.min_spacing());
  return volume.origin().rotate(volume.gradient_normal_local(surface, away));
}

}  // namespace

DrillState DrillState::make(const DrillConfig& config, const Pose& initial) {
  if (config.shaft_count < 0) throw Error(ErrorCode::InvalidArgument, "shaft_count must be >= 0");
  if (!(config.tip_radius > 0.0) || !(config.shaft_radius > 0.0))
    throw Error(ErrorCode::InvalidArgument, "cursor radii must be > 0");
  DrillState s;
  s.pose = initial.normalized();
  s.input_pose = s.pose;
  const Vec3 axis = config.shaft_axis.normalized();
  s.cursors.push_back({CursorRole::Tip, config.tip_radius, Vec3::Zero(), s.pose.position, s.pose.position});
  for (int i = 0; i < config.shaft_count; ++i) {
    ToolCursor c;
    c.role = CursorRole::Shaft;
    c.radius = config.shaft_radius;
    c.offset = axis * (config.shaft_start + i * config.shaft_spacing);
    c.goal = c.proxy = s.pose.transform(c.offset);
    s.cursors.push_back(c);
  }
  return s;
}

bool sphere_collides(const VoxelVolume& volume, const Vec3& center, double radius) {
  const Vec3 local = volume.local_from_world(center);
  const VoxelRange r = voxels_near(volume, local, radius);
  if (r.empty || bricks_empty(volume, r)) return false;
  const double r2 = radius * radius;
  for (int z = r.lo[2]; z <= r.hi[2]; ++z)
    for (int y = r.lo[1]; y <= r.hi[1]; ++y)
      for (int x = r.lo[0]; x <= r.hi[0]; ++x)
        if (volume.occupied(x, y, z) && (volume.voxel_center_local(x, y, z) - local).squaredNorm() < r2) return true;
  return false;
}

ProxyResult update_proxies(const Pose& input_pose, const VoxelVolume& volume, DrillState& state,
                           const DrillConfig& config) {
  state.input_pose = input_pose.normalized();
  ProxyResult pr;
  pr.errors.resize(state.cursors.size());
  for (std::size_t i = 0; i < state.cursors.size(); ++i) {
    ToolCursor& c = state.cursors[i];
    c.goal = state.input_pose.transform(c.offset);
    Vec3 pos = c.proxy;
    Vec3 target = c.goal;
    bool touched = false;
    for (int attempt = 0; attempt <= config.slide_iterations; ++attempt) {
      const MoveResult m = move_sphere(volume, pos, target, c.radius, config);
      pos = m.position;
      if (!m.contact) break;
      touched = true;
      const Vec3 remaining = c.goal - pos;
      const double rem_len = remaining.norm();
      if (rem_len < 1e-12) break;
      const Vec3 n = contact_normal(volume, pos, c.radius, config.contact_tolerance, -remaining / rem_len);
      const Vec3 tangential = remaining - remaining.dot(n) * n;
      if (tangential.norm() < 1e-12) break;
      target = pos + tangential;
    }
    c.proxy = pos;
    pr.errors[i] = c.proxy - c.goal;
    pr.contact = pr.contact || touched || (c.proxy - c.goal).norm() > config.epsilon;
  }

  // strict comparison from index 0 keeps the lowest index on ties
  double best = 0.0;
  for (std::size_t i = 0; i < pr.errors.size(); ++i) {
    const double e = pr.errors[i].norm();
    if (e > best) {
      best = e;
      pr.s_max = static_cast<int>(i);
    }
  }
  pr.e_max = pr.errors.empty() ? Vec3::Zero() : pr.errors[pr.s_max];
  state.contact = pr.contact;
  return pr;
}

Vec3 control_law(const Vec3& e, double k, double f_max) {
  if (!(k > 0.0)) throw Error(ErrorCode::InvalidArgument, "stiffness must be > 0");
  Vec3 f = k * e;
  const double mag = f.norm();
  if (mag > f_max && mag > 0.0) f *= f_max / mag;
  return f;
}

DrillResolution resolve_drill(DrillState& state, const ProxyResult& pr, VoxelVolume& volume,
                              const DrillConfig& config, std::uint64_t tick) {
  DrillResolution out;
  const Quat orientation = state.input_pose.orientation;
  if (pr.e_max.norm() > config.epsilon && pr.s_max != 0) {
    const ToolCursor& c = state.cursors[pr.s_max];
    // drill origin implied by the blocked shaft proxy
    out.pose = {c.proxy + orientation * (-c.offset), orientation};
    out.force = control_law(pr.e_max, config.stiffness, config.max_force);
    out.shaft_blocked = true;
  } else {
    const ToolCursor& tip = state.cursors.front();
    out.pose = {tip.proxy, orientation};
    if (state.drilling_enabled)
      out.edit = volume.remove_colliding_voxels(tip.proxy, tip.radius + config.contact_tolerance, tick);
    out.force = control_law(pr.errors.front(), config.stiffness, config.max_force);
  }
  state.pose = out.pose;
  state.force = out.force;
  return out;
}

}  // namespace drillsim
