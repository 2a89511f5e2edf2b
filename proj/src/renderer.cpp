#include "drillsim/renderer.hpp"

#include "drillsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace drillsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSkipMargin = 1e-9;

const kernels::KernelTable& table_for(const RenderOptions& opts) {
  return opts.kernels ? *opts.kernels : kernels::active_kernels();
}

template <typename Fn>
void parallel_rows(int height, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(1, height));
  if (threads == 1) {
    fn(0, height);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      const int begin = height * t / threads;
      const int end = height * (t + 1) / threads;
      workers.emplace_back([&fn, &errors, t, begin, end] {
        try {
          fn(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Smallest root t >= t_min of |o + t d - c|^2 = r^2.
double sphere_hit(const Vec3& o, const Vec3& d, const Vec3& c, double r, double t_min) {
  const Vec3 oc = o - c;
  const double a = d.squaredNorm();
  const double b = d.dot(oc);
  const double cc = oc.squaredNorm() - r * r;
  const double disc = b * b - a * cc;
  if (disc < 0.0) return kInf;
  const double s = std::sqrt(disc);
  const double t0 = (-b - s) / a;
  const double t1 = (-b + s) / a;
  if (t0 >= t_min) return t0;
  if (t1 >= t_min) return t1;
  return kInf;
}

double capsule_hit(const Vec3& o, const Vec3& d, const Vec3& pa, const Vec3& pb, double r, double t_min) {
  double best = std::min(sphere_hit(o, d, pa, r, t_min), sphere_hit(o, d, pb, r, t_min));
  const Vec3 ba = pb - pa;
  const double baba = ba.squaredNorm();
  if (baba <= 0.0) return best;
  const Vec3 oa = o - pa;
  const double bard = ba.dot(d);
  const double baoa = ba.dot(oa);
  const double a = baba * d.squaredNorm() - bard * bard;
  const double b = baba * d.dot(oa) - baoa * bard;
  const double c = baba * oa.squaredNorm() - baoa * baoa - r * r * baba;
  const double disc = b * b - a * c;
  if (a > 1e-300 && disc >= 0.0) {
    const double s = std::sqrt(disc);
    for (const double t : {(-b - s) / a, (-b + s) / a}) {
      if (t < t_min) continue;
      const double y = baoa + t * bard;
      if (y > 0.0 && y < baba) best = std::min(best, t);
    }
  }
  return best;
}

Vec3 body_normal(const RenderBody& body, const Vec3& p) {
  Vec3 q = body.a;
  if (body.shape == BodyShape::Capsule) {
    const Vec3 ba = body.b - body.a;
    const double len2 = ba.squaredNorm();
    const double u = len2 > 0.0 ? std::clamp((p - body.a).dot(ba) / len2, 0.0, 1.0) : 0.0;
    q = body.a + u * ba;
  }
  const Vec3 n = p - q;
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
}

struct VolumeHit {
  bool hit = false;
  double depth = kInf;
  std::uint8_t label = 0;
  Vec3 local_point;
};

/// Slab test against the closed local box [0, extent].
bool box_interval(const Vec3& o, const Vec3& d, const Vec3& extent, double& t_enter, double& t_exit) {
  t_enter = -kInf;
  t_exit = kInf;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < 0.0 || o[a] > extent[a]) return false;
      continue;
    }
    double t0 = (0.0 - o[a]) / d[a];
    double t1 = (extent[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  return t_enter <= t_exit;
}

VolumeHit march_volume(const VoxelVolume& vol, const Vec3& o, const Vec3& d, double t_near, double t_far) {
  VolumeHit out;
  double t_enter, t_exit;
  if (!box_interval(o, d, vol.extent(), t_enter, t_exit)) return out;
  const double t0 = std::max(t_near, t_enter);
  const double t_end = std::min(t_far, t_exit);
  if (t0 > t_end) return out;
  const double step = 0.5 * vol.min_spacing() / d.norm();
  const Vec3 spacing = vol.spacing();
  const double brick_len[3] = {spacing.x() * VoxelVolume::kBrickSize, spacing.y() * VoxelVolume::kBrickSize,
                               spacing.z() * VoxelVolume::kBrickSize};

  std::int64_t k = 0;
  for (;;) {
    const double t = t0 + static_cast<double>(k) * step;
    if (t > t_end) return out;
    const Vec3 p = o + t * d;
    const auto v = vol.locate_local(p);
    if (!v) {
      ++k;
      continue;
    }
    const int bx = v->x >> VoxelVolume::kBrickShift;
    const int by = v->y >> VoxelVolume::kBrickShift;
    const int bz = v->z >> VoxelVolume::kBrickShift;
    if (vol.brick_empty(bx, by, bz)) {
      const int b[3] = {bx, by, bz};
      double t_leave = kInf;
      for (int a = 0; a < 3; ++a) {
        if (d[a] > 0.0) t_leave = std::min(t_leave, ((b[a] + 1) * brick_len[a] - o[a]) / d[a]);
        else if (d[a] < 0.0) t_leave = std::min(t_leave, (b[a] * brick_len[a] - o[a]) / d[a]);
      }
      const double next = std::ceil((t_leave - kSkipMargin - t0) / step);
      k = std::max(k + 1, static_cast<std::int64_t>(next));
      continue;
    }
    if (!vol.occupied(v->x, v->y, v->z)) {
      ++k;
      continue;
    }
    out.hit = true;
    out.label = vol.label(v->x, v->y, v->z);
    if (k == 0) {
      out.depth = t;
      out.local_point = p;
      return out;
    }
    double lo = t0 + static_cast<double>(k - 1) * step;
    double hi = t;
    const double mid = 0.5 * (lo + hi);
    const SampleResult s = vol.sample_local(o + mid * d);
    if (s.occupied) {
      hi = mid;
      out.label = s.label;
    } else {
      lo = mid;
    }
    out.depth = 0.5 * (lo + hi);
    out.local_point = o + out.depth * d;
    return out;
  }
}

Rgb8 shade(Rgb8 albedo, const Vec3& normal, const RenderScene& scene) {
  const double lambert = std::max(0.0, -normal.dot(scene.light_direction));
  const double k = scene.ambient + (1.0 - scene.ambient) * lambert;
  auto ch = [k](std::uint8_t c) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(c * k), 0L, 255L));
  };
  return {ch(albedo.r), ch(albedo.g), ch(albedo.b)};
}

enum PassMask : unsigned { kColor = 1, kSeg = 2 };

FrameBuffers run_passes(const RenderScene& scene, const CameraModel& cam, const RenderOptions& opts,
                        unsigned passes) {
  cam.frustum.validate();
  const int w = cam.frustum.width;
  const int h = cam.frustum.height;
  FrameBuffers fb;
  fb.width = w;
  fb.height = h;
  const std::size_t n = fb.pixel_count();
  fb.color.assign(n * 3, 0);
  fb.packed_depth.assign(n, PackedDepth{});
  fb.seg.assign(n, 0);
  fb.valid.assign(n, 0);
  std::vector<double> z01(n, -1.0);

  parallel_rows(h, opts.threads, [&](int row_begin, int row_end) {
    for (int y = row_begin; y < row_end; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const RayHit hit = trace_ray(scene, cam, x, y);
        if (!hit.hit) {
          fb.color[3 * i] = scene.background.r;
          fb.color[3 * i + 1] = scene.background.g;
          fb.color[3 * i + 2] = scene.background.b;
          continue;
        }
        fb.valid[i] = 1;
        z01[i] = std::min(window_depth(hit.depth, cam.frustum), std::nextafter(1.0, 0.0));
        if (passes & kColor) {
          const Rgb8 c = shade(hit.albedo, hit.normal, scene);
          fb.color[3 * i] = c.r;
          fb.color[3 * i + 1] = c.g;
          fb.color[3 * i + 2] = c.b;
        }
        if (passes & kSeg) {
          if (hit.label == 0) {
            const std::string what = hit.body >= 0 ? scene.bodies[hit.body].name : std::string("volume label");
            throw Error(ErrorCode::MissingStyle, what + " is visible but has no segmentation label");
          }
          fb.seg[i] = hit.label;
        }
      }
    }
  });
  table_for(opts).pack_depth(z01, fb.packed_depth);
  return fb;
}

}  // namespace

CameraRay pixel_ray(const CameraModel& cam, int px, int py) {
  const Frustum& fr = cam.frustum;
  const double tan_half = std::tan(fr.fva / 2.0);
  const double xn = ((px + 0.5) * 2.0) / fr.width - 1.0;
  const double yn = 1.0 - ((py + 0.5) * 2.0) / fr.height;
  const Vec3 dir_cam(xn * tan_half * fr.aspect(), yn * tan_half, -1.0);
  return {cam.pose.position, cam.pose.rotate(dir_cam)};
}

RayHit trace_ray(const RenderScene& scene, const CameraModel& cam, int px, int py) {
  const CameraRay ray = pixel_ray(cam, px, py);
  const double t_near = cam.frustum.near_plane;
  const double t_far = cam.frustum.far_plane;
  RayHit best;
  double best_t = kInf;

  if (scene.volume != nullptr) {
    const VoxelVolume& vol = *scene.volume;
    const Vec3 o = vol.local_from_world(ray.origin);
    const Vec3 d = vol.origin().inverse().rotate(ray.direction);
    const VolumeHit vh = march_volume(vol, o, d, t_near, t_far);
    if (vh.hit) {
      best_t = vh.depth;
      best.hit = true;
      best.depth = vh.depth;
      best.label = vh.label;
      best.body = -1;
      const Vec3 n_local = vol.shading_normal_local(vh.local_point, -d.normalized());
      best.normal = vol.origin().rotate(n_local);
      const auto it = vol.label_table().find(vh.label);
      best.albedo = it != vol.label_table().end() ? it->second.color : Rgb8{180, 180, 180};
      if (it == vol.label_table().end()) best.label = 0;
    }
  }

  for (std::size_t b = 0; b < scene.bodies.size(); ++b) {
    const RenderBody& body = scene.bodies[b];
    const double t = body.shape == BodyShape::Sphere
                         ? sphere_hit(ray.origin, ray.direction, body.a, body.radius, t_near)
                         : capsule_hit(ray.origin, ray.direction, body.a, body.b, body.radius, t_near);
    if (!(t < best_t) || t > t_far) continue;
    best_t = t;
    best.hit = true;
    best.depth = t;
    best.body = static_cast<int>(b);
    best.label = body.seg_label.value_or(0);
    best.albedo = body.color;
    best.normal = body_normal(body, ray.origin + t * ray.direction);
  }
  return best;
}

FrameBuffers render_passes(const RenderScene& scene, const CameraModel& cam, const RenderOptions& opts) {
  return run_passes(scene, cam, opts, kColor | kSeg);
}

FrameBuffers render_color(const RenderScene& scene, const CameraModel& cam, const RenderOptions& opts) {
  return run_passes(scene, cam, opts, kColor);
}

std::vector<std::uint8_t> render_segmentation(const RenderScene& scene, const CameraModel& cam,
                                              const RenderOptions& opts) {
  return run_passes(scene, cam, opts, kSeg).seg;
}

std::vector<NormalizedPoint> depth_linearize_pass(const FrameBuffers& fb, const Frustum& fr,
                                                  const RenderOptions& opts) {
  if (fb.width != fr.width || fb.height != fr.height)
    throw Error(ErrorCode::ResolutionMismatch, "frame buffers do not match the frustum image size");
  const auto& k = table_for(opts);
  const std::size_t n = fb.pixel_count();
  std::vector<double> z01(n);
  k.unpack_depth(fb.packed_depth, z01);
  std::vector<NormalizedPoint> out(n);
  const UnprojectParams params = UnprojectParams::from(fr);
  parallel_rows(fb.height, opts.threads, [&](int begin, int end) {
    k.unproject_rows(params, z01.data(), fb.valid.data(), fb.width, begin, end, out.data());
  });
  return out;
}

namespace {

std::vector<float> rescaled_plane(const std::vector<NormalizedPoint>& normalized, const Frustum& fr,
                                  const RenderOptions& opts) {
  std::vector<float> xyz(normalized.size() * 3);
  table_for(opts).rescale_points(UnprojectParams::from(fr), normalized.data(), normalized.size(), xyz.data());
  return xyz;
}

}  // namespace

PointCloud assemble_point_cloud(const FrameBuffers& fb, const std::vector<NormalizedPoint>& normalized,
                                const Frustum& fr, const RenderOptions& opts) {
  const std::vector<float> xyz = rescaled_plane(normalized, fr, opts);
  PointCloud cloud;
  for (int y = 0; y < fb.height; ++y) {
    for (int x = 0; x < fb.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * fb.width + x;
      if (!fb.valid[i]) continue;
      CloudPoint p;
      p.x = xyz[3 * i];
      p.y = xyz[3 * i + 1];
      p.z = xyz[3 * i + 2];
      p.rgb = {fb.color[3 * i], fb.color[3 * i + 1], fb.color[3 * i + 2]};
      p.label = fb.seg[i];
      p.u = static_cast<std::uint16_t>(x);
      p.v = static_cast<std::uint16_t>(y);
      cloud.points.push_back(p);
    }
  }
  return cloud;
}

std::vector<float> metric_depth(const std::vector<NormalizedPoint>& normalized, const Frustum& fr,
                                const RenderOptions& opts) {
  const std::vector<float> xyz = rescaled_plane(normalized, fr, opts);
  std::vector<float> depth(normalized.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const float z = xyz[3 * i + 2];
    depth[i] = std::isfinite(z) ? -z : std::numeric_limits<float>::infinity();
  }
  return depth;
}

StereoFrame render_stereo(const RenderScene& scene, const StereoRig& rig, const RenderOptions& opts) {
  return {render_passes(scene, rig.left, opts), render_passes(scene, rig.right, opts)};
}

}  // namespace drillsim
