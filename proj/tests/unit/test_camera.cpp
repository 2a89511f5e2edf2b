#include "drillsim/camera.hpp"
#include "drillsim/error.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace drillsim;

namespace {
Frustum wide() { return {0.1, 10.0, kPi / 4, 640, 480}; }
}  // namespace

TEST_CASE("max_dims evaluates the frustum extents") {
  const MaxDims md = max_dims(wide());
  CHECK(md.x == doctest::Approx(8.284271).epsilon(1e-6));
  CHECK(md.y == doctest::Approx(11.045695).epsilon(1e-6));
  CHECK(md.z == doctest::Approx(9.9).epsilon(1e-12));

  Frustum thin = wide();
  thin.fva = 1e-9;
  CHECK(max_dims(thin).x == doctest::Approx(10.0 * 1e-9).epsilon(1e-6));

  Frustum doubled{0.3, 0.6, 1.0, 32, 32};
  CHECK(max_dims(doubled).z == doctest::Approx(0.3));
}

TEST_CASE("intrinsics from the vertical field angle") {
  const Intrinsics k = intrinsics(wide());
  CHECK(std::abs(k.fx - 579.4113) < 1e-3);
  CHECK(k.fy == k.fx);
  CHECK(k.cx == 320.0);
  CHECK(k.cy == 240.0);

  Frustum right = wide();
  right.fva = kPi / 2;
  CHECK(intrinsics(right).fx == doctest::Approx(240.0).epsilon(1e-12));
  CHECK(intrinsics(right).cx == 320.0);
}

TEST_CASE("frustum validation") {
  CHECK_THROWS_AS((Frustum{0.0, 1.0, 1.0, 4, 4}.validate()), Error);
  CHECK_THROWS_AS((Frustum{1.0, 1.0, 1.0, 4, 4}.validate()), Error);
  CHECK_THROWS_AS((Frustum{0.1, 1.0, kPi, 4, 4}.validate()), Error);
  CHECK_THROWS_AS((Frustum{0.1, 1.0, 1.0, 0, 4}.validate()), Error);
  CHECK_NOTHROW(wide().validate());
}

TEST_CASE("depth packing") {
  CHECK(pack_depth(0.5) == PackedDepth{{0, 0, 128, 0}});
  CHECK(unpack_depth(pack_depth(0.5)) == 0.5);
  CHECK(pack_depth(0.0) == PackedDepth{{0, 0, 0, 0}});
  const double top = 1.0 - std::ldexp(1.0, -24);
  CHECK(pack_depth(top) == PackedDepth{{255, 255, 255, 0}});
  CHECK(unpack_depth(pack_depth(top)) == top);

  try {
    pack_depth(1.0);
    FAIL("expected DomainError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainError);
  }
  CHECK_THROWS_AS(pack_depth(-1e-9), Error);
  CHECK_THROWS_AS(pack_depth(std::nan("")), Error);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 20000; ++i) {
    const double z = testutil::uniform(rng, 0.0, 1.0);
    CHECK_LE(std::abs(unpack_depth(pack_depth(z)) - z), std::ldexp(1.0, -24));
  }
}

TEST_CASE("unprojection of the center pixel") {
  const Frustum fr{0.1, 10.0, kPi / 4, 641, 481};  // odd size so pixel 320/240 sits on the axis
  const NormalizedPoint near = unproject_fragment(320, 240, 0.0, fr);
  CHECK(near.x == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(near.y == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(near.z) < 1e-12);
  const NormalizedPoint far = unproject_fragment(320, 240, 1.0, fr);
  CHECK(far.z == doctest::Approx(1.0).epsilon(1e-9));

  const Vec3 p = rescale_point({0.5, 0.5, 0.0}, fr);
  CHECK(p.isApprox(Vec3(0, 0, -0.1)));
  const MaxDims md = max_dims(fr);
  const Vec3 corner = rescale_point({1, 1, 1}, fr);
  CHECK(corner.x() == doctest::Approx(md.x / 2));
  CHECK(corner.y() == doctest::Approx(md.y / 2));
  CHECK(corner.z() == doctest::Approx(-10.0));
  CHECK(std::isinf(rescale_point(NormalizedPoint::sentinel(), fr).x()));
}

TEST_CASE("project then unproject recovers camera-space points") {
  const Frustum fr = wide();
  const Vec3 known(1.0, -0.5, -3.0);
  const Fragment f = project_to_fragment(known, fr);
  CHECK((rescale_point(unproject_fragment(f.x, f.y, f.z01, fr), fr) - known).norm() < 1e-4);

  // hand-computed perspective divide for the same point
  const double t = std::tan(kPi / 8);
  const double ndc_x = known.x() / (-known.z() * t * fr.aspect());
  const double ndc_y = known.y() / (-known.z() * t);
  CHECK(f.x == doctest::Approx((ndc_x + 1) * 320 - 0.5).epsilon(1e-12));
  CHECK(f.y == doctest::Approx((1 - ndc_y) * 240 - 0.5).epsilon(1e-12));

  std::mt19937_64 rng(11);
  double worst = 0;
  for (int i = 0; i < 2000; ++i) {
    const double d = testutil::uniform(rng, fr.near_plane, fr.far_plane);
    const double hy = d * t, hx = hy * fr.aspect();
    const Vec3 p(testutil::uniform(rng, -hx, hx), testutil::uniform(rng, -hy, hy), -d);
    const Fragment g = project_to_fragment(p, fr);
    worst = std::max(worst, (rescale_point(unproject_fragment(g.x, g.y, g.z01, fr), fr) - p).norm());
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("pinhole and frustum projection agree") {
  const Frustum fr = wide();
  const Intrinsics k = intrinsics(fr);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double d = testutil::uniform(rng, 0.2, 9.0);
    const Vec3 p(testutil::uniform(rng, -d, d) * 0.5, testutil::uniform(rng, -d, d) * 0.4, -d);
    const Fragment f = project_to_fragment(p, fr);
    const auto uv = project_pinhole(p, k);
    CHECK(std::abs(uv[0] - (f.x + 0.5)) < 1e-6);
    CHECK(std::abs(uv[1] - (f.y + 0.5)) < 1e-6);
  }
}

TEST_CASE("window depth matches the projected fragment") {
  const Frustum fr = wide();
  for (double d : {0.1, 0.5, 3.0, 9.99}) {
    CHECK(window_depth(d, fr) == doctest::Approx(project_to_fragment(Vec3(0, 0, -d), fr).z01).epsilon(1e-12));
  }
  CHECK(window_depth(fr.near_plane, fr) == doctest::Approx(0.0));
  CHECK(window_depth(fr.far_plane, fr) == doctest::Approx(1.0));
}

TEST_CASE("stereo rig geometry") {
  const Frustum fr = wide();
  std::mt19937_64 rng(5);
  const Pose center{Vec3(0.1, -0.2, 0.3), testutil::random_quat(rng)};
  const StereoRig rig = build_stereo_rig(center, fr, 0.065);
  const Vec3 x_axis = center.rotate(Vec3::UnitX());
  CHECK((rig.right.pose.position - (rig.left.pose.position + 0.065 * x_axis)).norm() < 1e-12);
  CHECK(((rig.left.pose.position + rig.right.pose.position) / 2 - center.position).norm() < 1e-12);
  CHECK(rotation_angle(rig.left.pose.orientation, rig.right.pose.orientation) < 1e-12);
  const Pose rfl = rig.right_from_left();
  CHECK((rfl.position - Vec3(-0.065, 0, 0)).norm() < 1e-12);
  CHECK(rotation_angle(rfl.orientation, Quat::Identity()) < 1e-9);

  // disparity of a point straight ahead of the left camera
  const Intrinsics k = intrinsics(fr);
  const Vec3 world = rig.left.pose.transform(Vec3(0, 0, -0.2));
  const double ul = project_pinhole(rig.left.to_camera(world), k)[0];
  const double ur = project_pinhole(rig.right.to_camera(world), k)[0];
  CHECK(ul - ur == doctest::Approx(188.3).epsilon(2e-4));
  CHECK(ul - ur == doctest::Approx(k.fx * 0.065 / 0.2).epsilon(1e-9));

  const StereoRig mono = build_stereo_rig(center, fr, 0.0);
  CHECK(mono.left.pose == mono.right.pose);
}
