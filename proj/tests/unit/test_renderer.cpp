#include "drillsim/error.hpp"
#include "drillsim/renderer.hpp"
#include "drillsim/trajectory.hpp"
#include "render_oracle.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>

using namespace drillsim;

namespace {

constexpr double kH = 0.001;
const VoxelDims kDims{64, 64, 64};

/// Solid block in the middle of a 64³ volume centered on the origin; top face at z = 8 mm.
VoxelVolume block() {
  return testutil::block_volume(kDims, kH, {16, 16, 8}, {48, 48, 40}, 1, testutil::centered_origin(kDims, kH));
}

CameraModel overhead(int w = 64, int h = 48, double height = 0.15) {
  return {Frustum{0.05, 0.6, kPi / 4, w, h}, Pose::from_position(Vec3(0, 0, height))};
}

/// Ray-box entry parameter, or inf when the ray misses.
double box_entry(const Vec3& o, const Vec3& d, const Vec3& lo, const Vec3& hi, double* length = nullptr) {
  double a = -INFINITY, b = INFINITY;
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0) {
      if (o[k] < lo[k] || o[k] > hi[k]) return INFINITY;
      continue;
    }
    const double t0 = (lo[k] - o[k]) / d[k], t1 = (hi[k] - o[k]) / d[k];
    a = std::max(a, std::min(t0, t1));
    b = std::min(b, std::max(t0, t1));
  }
  if (a > b) return INFINITY;
  if (length) *length = (b - a) * d.norm();
  return a;
}

std::vector<float> depth_plane(const FrameBuffers& fb, const Frustum& fr) {
  return metric_depth(depth_linearize_pass(fb, fr), fr);
}

}  // namespace

TEST_CASE("empty scene renders background everywhere") {
  VoxelVolume empty(VoxelDims{8, 8, 8}, Vec3::Constant(kH), Pose{});
  RenderScene scene;
  scene.volume = &empty;
  scene.background = {10, 20, 30};
  const FrameBuffers fb = render_passes(scene, overhead(16, 12, 0.1));
  for (std::size_t i = 0; i < fb.pixel_count(); ++i) {
    CHECK(fb.valid[i] == 0);
    CHECK(fb.seg[i] == 0);
    CHECK(fb.color[3 * i] == 10);
    CHECK(fb.color[3 * i + 2] == 30);
  }
  CHECK(assemble_point_cloud(fb, depth_linearize_pass(fb, overhead(16, 12).frustum), overhead(16, 12).frustum)
            .points.empty());
}

TEST_CASE("box depth matches the analytic ray-box intersection") {
  const VoxelVolume v = block();
  RenderScene scene;
  scene.volume = &v;
  const CameraModel cam = overhead(96, 72, 0.06);
  const FrameBuffers fb = render_passes(scene, cam);
  const auto depth = depth_plane(fb, cam.frustum);
  const Vec3 lo(-0.016, -0.016, -0.024), hi(0.016, 0.016, 0.008);
  int checked = 0;
  for (int y = 0; y < 72; ++y)
    for (int x = 0; x < 96; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * 96 + x;
      const auto [o, d] = oracle::ray(cam, x, y);
      double len = 0;
      const double t = box_entry(o, d, lo, hi, &len);
      if (!std::isfinite(t)) {
        CHECK(fb.valid[i] == 0);
        continue;
      }
      if (len < 0.5 * kH) continue;  // grazing rays may step over a sliver
      REQUIRE(fb.valid[i] == 1);
      CHECK(std::abs(depth[i] - t) < 0.25 * kH);
      CHECK(depth[i] >= cam.frustum.near_plane);
      CHECK(depth[i] <= cam.frustum.far_plane);
      ++checked;
    }
  CHECK(checked > 1000);
  // the center ray hits the top face head-on
  const auto center = trace_ray(scene, cam, 48, 36);
  CHECK(center.hit);
  const auto [o, d] = oracle::ray(cam, 48, 36);
  CHECK(std::abs(center.depth - box_entry(o, d, lo, hi)) < 0.25 * kH);
}

TEST_CASE("a sphere in front of the volume wins the pixel") {
  const VoxelVolume v = block();
  RenderScene scene;
  scene.volume = &v;
  const Vec3 c(0, 0, 0.05);
  scene.bodies.push_back({"drill", BodyShape::Sphere, c, c, 0.004, Rgb8{0, 200, 0}, std::uint8_t{10}});
  const CameraModel cam{Frustum{0.05, 0.6, kPi / 4, 65, 49}, Pose::from_position(Vec3(0, 0, 0.15))};
  const RayHit hit = trace_ray(scene, cam, 32, 24);
  CHECK(hit.body == 0);
  CHECK(hit.label == 10);
  CHECK(hit.depth == doctest::Approx(0.15 - 0.05 - 0.004).epsilon(1e-9));
  const FrameBuffers fb = render_passes(scene, cam);
  const std::size_t i = 24 * 65 + 32;
  CHECK(fb.seg[i] == 10);
  CHECK(fb.color[3 * i] == 0);
  CHECK(fb.color[3 * i + 1] > 0);
  CHECK(depth_plane(fb, cam.frustum)[i] == doctest::Approx(0.096).epsilon(1e-5));
  // a pixel just outside the sphere's silhouette sees the bone behind it
  CHECK(fb.seg[24 * 65 + 38] == 1);
}

TEST_CASE("segmentation matches the single-ray oracle") {
  std::mt19937_64 rng(99);
  VoxelVolume v = block();
  v.set_label_info(2, {"dura", Rgb8{200, 100, 100}});
  for (int y = 16; y < 48; ++y)
    for (int x = 16; x < 48; ++x) v.set_voxel(x, y, 39, 255, 2);  // dura sheet on top
  v.remove_colliding_voxels(v.voxel_center_world(30, 30, 39), 0.006, 1);
  for (int trial = 0; trial < 3; ++trial) {
    RenderScene scene;
    scene.volume = &v;
    const Vec3 c(testutil::uniform(rng, -0.01, 0.01), testutil::uniform(rng, -0.01, 0.01), 0.012);
    scene.bodies.push_back({"bone_ball", BodyShape::Sphere, c, c, 0.005, Rgb8{255, 255, 255}, std::uint8_t{1}});
    scene.bodies.push_back({"shaft", BodyShape::Capsule, c + Vec3(0, 0, 0.005), c + Vec3(0.01, 0.01, 0.05), 0.0015,
                            Rgb8{90, 90, 90}, std::uint8_t{10}});
    const Pose pose = look_at(Vec3(testutil::uniform(rng, -0.02, 0.02), testutil::uniform(rng, -0.04, -0.02), 0.06),
                              Vec3::Zero(), Vec3::UnitZ());
    const CameraModel cam{Frustum{0.05, 0.6, kPi / 4, 80, 60}, pose};
    const FrameBuffers fb = render_passes(scene, cam, RenderOptions{2});
    int labeled = 0;
    for (int s = 0; s < 200; ++s) {
      const int x = static_cast<int>(rng() % 80), y = static_cast<int>(rng() % 60);
      const oracle::Hit h = oracle::trace(scene, cam, x, y);
      const std::size_t i = static_cast<std::size_t>(y) * 80 + x;
      CHECK(fb.seg[i] == h.label);
      CHECK(fb.valid[i] == h.hit);
      labeled += h.label != 0;
    }
    CHECK(labeled > 50);
  }
}

TEST_CASE("lighting changes color but not segmentation or depth") {
  const VoxelVolume v = block();
  RenderScene scene;
  scene.volume = &v;
  const CameraModel cam{Frustum{0.05, 0.6, kPi / 4, 64, 48}, look_at(Vec3(0.05, -0.08, 0.1), Vec3::Zero(), Vec3::UnitZ())};
  const FrameBuffers a = render_passes(scene, cam);
  scene.light_direction = Vec3(-1, 0.2, -0.3).normalized();
  const FrameBuffers b = render_passes(scene, cam);
  CHECK(a.seg == b.seg);
  CHECK(a.valid == b.valid);
  CHECK(a.packed_depth == b.packed_depth);
  CHECK(a.color != b.color);
  CHECK(render_segmentation(scene, cam) == a.seg);
  for (std::size_t i = 0; i < a.pixel_count(); ++i) CHECK((a.seg[i] != 0) == (a.valid[i] != 0));
}

TEST_CASE("a visible body without a label is an error") {
  RenderScene scene;
  scene.bodies.push_back({"ghost", BodyShape::Sphere, Vec3(0, 0, 0), Vec3::Zero(), 0.01, Rgb8{}, std::nullopt});
  const CameraModel cam = overhead(16, 12, 0.1);
  try {
    render_passes(scene, cam);
    FAIL("expected MissingStyle");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingStyle);
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
  }
  CHECK_NOTHROW(render_color(scene, cam));
}

TEST_CASE("point cloud: one point per valid pixel, flat wall depth") {
  // wall: a slab covering the whole view, front face at z = 0
  const VoxelDims dims{200, 200, 4};
  const VoxelVolume wall =
      testutil::block_volume(dims, kH, {0, 0, 0}, {200, 200, 4}, 1, Pose::from_position(Vec3(-0.1, -0.1, -0.004)));
  RenderScene scene;
  scene.volume = &wall;
  const CameraModel cam = overhead(64, 48, 0.15);
  const FrameBuffers fb = render_passes(scene, cam);
  const auto normalized = depth_linearize_pass(fb, cam.frustum);
  const PointCloud pc = assemble_point_cloud(fb, normalized, cam.frustum);
  std::size_t valid = 0;
  for (auto b : fb.valid) valid += b;
  CHECK(pc.points.size() == valid);
  CHECK(valid == fb.pixel_count());
  for (const auto& p : pc.points) {
    CHECK(std::abs(p.z + 0.15) < 1e-3);
    const std::size_t i = static_cast<std::size_t>(p.v) * fb.width + p.u;
    CHECK(p.label == fb.seg[i]);
    CHECK(p.rgb == Rgb8{fb.color[3 * i], fb.color[3 * i + 1], fb.color[3 * i + 2]});
  }
  // unprojected points coincide with the traced hit points
  for (int y = 0; y < 48; y += 7)
    for (int x = 0; x < 64; x += 9) {
      const std::size_t i = static_cast<std::size_t>(y) * 64 + x;
      const auto [o, d] = oracle::ray(cam, x, y);
      const Vec3 traced = cam.to_camera(o + trace_ray(scene, cam, x, y).depth * d);
      CHECK((rescale_point(normalized[i], cam.frustum) - traced).norm() < 1e-3);
    }
}

TEST_CASE("drilled voxels disappear on the next render") {
  VoxelVolume v = block();
  RenderScene scene;
  scene.volume = &v;
  const CameraModel cam{Frustum{0.05, 0.6, kPi / 4, 65, 49}, Pose::from_position(Vec3(0, 0, 0.15))};
  const double before = trace_ray(scene, cam, 32, 24).depth;
  const VoxelEdit e = v.remove_colliding_voxels(Vec3(0, 0, 0.008), 0.004, 1);
  CHECK_FALSE(e.empty());
  const double after = trace_ray(scene, cam, 32, 24).depth;
  CHECK(after > before + 0.003);
  for (const auto& r : e.removed) CHECK_FALSE(v.sample(v.voxel_center_world(r.x, r.y, r.z)).occupied);
}

TEST_CASE("stereo: zero baseline gives identical planes, disparity follows fx*b/d") {
  const VoxelVolume v = block();
  RenderScene scene;
  scene.volume = &v;
  const Frustum fr{0.05, 0.6, kPi / 4, 160, 120};
  const Pose center = Pose::from_position(Vec3(0, 0, 0.2));
  const StereoFrame same = render_stereo(scene, build_stereo_rig(center, fr, 0.0));
  CHECK(same.left == same.right);

  // marker sphere at depth d from the rig
  RenderScene marker;
  const double d = 0.2;
  marker.bodies.push_back({"m", BodyShape::Sphere, Vec3(0.0, 0, 0.2 - d), Vec3::Zero(), 0.003, Rgb8{255, 0, 0}, std::uint8_t{5}});
  const double b = 0.02;
  const StereoFrame sf = render_stereo(marker, build_stereo_rig(center, fr, b));
  auto centroid = [&](const FrameBuffers& f) {
    double sx = 0, n = 0;
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x)
        if (f.seg[static_cast<std::size_t>(y) * f.width + x] == 5) {
          sx += x;
          n += 1;
        }
    REQUIRE(n > 0);
    return sx / n;
  };
  const double disparity = centroid(sf.left) - centroid(sf.right);
  CHECK(std::abs(disparity - intrinsics(fr).fx * b / d) <= 1.0);
}

TEST_CASE("rendering is deterministic across threads and kernel tables") {
  const VoxelVolume v = block();
  RenderScene scene;
  scene.volume = &v;
  const Vec3 c(0.004, -0.003, 0.015);
  scene.bodies.push_back({"tip", BodyShape::Sphere, c, c, 0.002, Rgb8{0, 200, 0}, std::uint8_t{10}});
  const StereoRig rig = build_stereo_rig(look_at(Vec3(0.02, -0.1, 0.1), Vec3::Zero(), Vec3::UnitZ()),
                                         Frustum{0.05, 0.6, kPi / 4, 96, 72}, 0.065);
  const StereoFrame one = render_stereo(scene, rig, RenderOptions{1});
  const StereoFrame three = render_stereo(scene, rig, RenderOptions{3});
  const StereoFrame ref = render_stereo(scene, rig, RenderOptions{2, &kernels::scalar_kernels()});
  CHECK(one.left == three.left);
  CHECK(one.right == three.right);
  CHECK(one.left == ref.left);
  const auto na = depth_linearize_pass(one.left, rig.left.frustum, RenderOptions{1});
  const auto nb = depth_linearize_pass(one.left, rig.left.frustum, RenderOptions{4, &kernels::scalar_kernels()});
  for (std::size_t i = 0; i < na.size(); ++i) {
    CHECK(std::bit_cast<std::uint64_t>(na[i].z) == std::bit_cast<std::uint64_t>(nb[i].z));
  }
}

TEST_CASE("near-plane pixel linearizes to the frustum center") {
  FrameBuffers fb;
  fb.width = 5;
  fb.height = 3;
  fb.packed_depth.assign(15, pack_depth(0.0));
  fb.valid.assign(15, 0);
  fb.valid[7] = 1;
  const Frustum fr{0.05, 0.6, kPi / 4, 5, 3};
  const auto n = depth_linearize_pass(fb, fr);
  CHECK(n[7].x == doctest::Approx(0.5));
  CHECK(n[7].y == doctest::Approx(0.5));
  CHECK(std::abs(n[7].z) < 1e-12);
  CHECK_FALSE(n[0].is_valid());
  CHECK_THROWS_AS(depth_linearize_pass(fb, Frustum{0.05, 0.6, kPi / 4, 6, 3}), Error);
}
