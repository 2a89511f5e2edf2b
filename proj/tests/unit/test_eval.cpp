#include "doctest.h"
#include "test_util.hpp"

#include "drillsim/error.hpp"
#include "drillsim/eval.hpp"
#include "drillsim/recording.hpp"

#include <fstream>

using namespace drillsim;
using namespace testutil;

namespace {

std::map<std::uint64_t, Pose> random_gt(std::mt19937_64& rng, int n) {
  std::map<std::uint64_t, Pose> gt;
  for (int i = 1; i <= n; ++i)
    gt[i] = Pose{Vec3(uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1)), random_quat(rng)};
  return gt;
}

std::vector<PoseEstimate> as_estimates(const std::map<std::uint64_t, Pose>& m, const Pose& left = Pose::identity(),
                                       const Vec3& offset = Vec3::Zero()) {
  std::vector<PoseEstimate> out;
  for (const auto& [f, p] : m) {
    Pose q = left * p;
    q.position += offset;
    out.push_back({f, q});
  }
  return out;
}

std::map<std::uint64_t, Pose> transformed(const std::map<std::uint64_t, Pose>& m, const Pose& t) {
  std::map<std::uint64_t, Pose> out;
  for (const auto& [f, p] : m) out[f] = t * p;
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

DepthMap constant_map(std::uint64_t frame, int w, int h, float d) {
  return {frame, w, h, std::vector<float>(static_cast<std::size_t>(w) * h, d)};
}

}  // namespace

TEST_CASE("mean/std match a brute-force recomputation") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(1 + rng() % 50);
    for (auto& x : v) x = uniform(rng, -5, 5);
    long double s = 0;
    for (double x : v) s += x;
    const long double mean = s / v.size();
    long double q = 0;
    for (double x : v) q += (x - mean) * (x - mean);
    const MeanStd got = mean_std(v);
    CHECK(got.mean == doctest::Approx(double(mean)).epsilon(1e-12));
    CHECK(got.std == doctest::Approx(double(std::sqrt(q / v.size()))).epsilon(1e-9));
  }
  CHECK(mean_std({}).mean == 0.0);
  CHECK(mean_std({2.0, 4.0}).std == 1.0);  // population, not sample
}

TEST_CASE("report formatting follows the table layout") {
  CHECK(format_mean_std({40.97, 22.40}) == "40.97 ± 22.40");
  CHECK(format_mean_std({1.0, 0.0}) == "1.00 ± 0.00");
  CHECK(format_mean_std({-0.001, 0.0}) == "0.00 ± 0.00");
  CHECK(format_mean_std({0.125, 0.0049}) == "0.12 ± 0.00");
}

TEST_CASE("ground truth against itself is exactly zero") {
  std::mt19937_64 rng(1);
  const auto gt = random_gt(rng, 30);
  for (auto a : {Alignment::None, Alignment::FirstFrame}) {
    const ErrorReport r = pose_error(gt, as_estimates(gt), a);
    CHECK(r.n_evaluated == 30);
    CHECK(r.n_missing == 0);
    CHECK(format_mean_std(r.translation) == "0.00 ± 0.00");
    CHECK(format_mean_std(r.rotation) == "0.00 ± 0.00");
    CHECK(r.translation.mean < 1e-9);
    CHECK(r.rotation.mean < 1e-5);
  }
  const std::string text = format_report(pose_error(gt, as_estimates(gt), Alignment::None));
  CHECK(text.find("0.00 ± 0.00 mm") != std::string::npos);
  CHECK(text.find("0.00 ± 0.00 deg") != std::string::npos);
}

TEST_CASE("constant +1 mm x offset gives 1.00 ± 0.00 mm and no rotation error") {
  std::mt19937_64 rng(2);
  const auto gt = random_gt(rng, 25);
  const ErrorReport r = pose_error(gt, as_estimates(gt, Pose::identity(), Vec3(0.001, 0, 0)), Alignment::None);
  CHECK(r.translation.mean == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.translation.std < 1e-9);
  CHECK(r.translation_l2.mean == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.rotation.mean < 1e-6);
  CHECK(format_report(r).find("1.00 ± 0.00 mm") != std::string::npos);

  // L1 sums the axes; L2 does not
  const ErrorReport d = pose_error(gt, as_estimates(gt, Pose::identity(), Vec3(0.001, -0.002, 0.002)), Alignment::None);
  CHECK(d.translation.mean == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(d.translation_l2.mean == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("rotation error is the geodesic angle; Euler L1 is reported alongside") {
  std::map<std::uint64_t, Pose> gt{{1, Pose::identity()}};
  const Quat q(Eigen::AngleAxisd(10.0 * kPi / 180.0, Vec3(1, 1, 0).normalized()));
  const ErrorReport r = pose_error(gt, {{1, Pose{Vec3::Zero(), q}}}, Alignment::None);
  CHECK(r.rotation.mean == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(r.rotation_euler_l1.mean > 10.0);
  // q and -q are the same rotation
  const ErrorReport s = pose_error(gt, {{1, Pose{Vec3::Zero(), Quat(-q.coeffs())}}}, Alignment::None);
  CHECK(s.rotation.mean == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("first-frame alignment removes a global offset between estimate and ground truth") {
  std::mt19937_64 rng(4);
  const auto gt = random_gt(rng, 40);
  const Pose t{Vec3(0.3, -0.2, 0.5), random_quat(rng)};
  const auto est = as_estimates(gt, t);
  const ErrorReport aligned = pose_error(gt, est, Alignment::FirstFrame);
  CHECK(aligned.translation.mean < 1e-8);
  CHECK(aligned.rotation.mean < 1e-5);
  CHECK(pose_error(gt, est, Alignment::None).translation.mean > 100.0);
}

TEST_CASE("rigid transform of both trajectories") {
  std::mt19937_64 rng(5);
  const auto gt = random_gt(rng, 40);
  auto est = as_estimates(gt);
  for (auto& e : est) {
    e.pose.position += Vec3(uniform(rng, -0.003, 0.003), uniform(rng, -0.003, 0.003), uniform(rng, -0.003, 0.003));
    e.pose.orientation = (e.pose.orientation * Quat(Eigen::AngleAxisd(uniform(rng, 0, 0.05), Vec3::UnitX()))).normalized();
  }
  const ErrorReport base = pose_error(gt, est, Alignment::FirstFrame);
  const ErrorReport base_none = pose_error(gt, est, Alignment::None);

  // any rigid transform: rotation-invariant measures are unchanged
  for (int k = 0; k < 5; ++k) {
    const Pose t{Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)), random_quat(rng)};
    std::vector<PoseEstimate> est_t = est;
    for (auto& e : est_t) e.pose = t * e.pose;
    for (auto [a, ref] : {std::pair{Alignment::FirstFrame, &base}, std::pair{Alignment::None, &base_none}}) {
      const ErrorReport r = pose_error(transformed(gt, t), est_t, a);
      CHECK(r.translation_l2.mean == doctest::Approx(ref->translation_l2.mean).epsilon(1e-6));
      CHECK(r.translation_l2.std == doctest::Approx(ref->translation_l2.std).epsilon(1e-5));
      CHECK(r.rotation.mean == doctest::Approx(ref->rotation.mean).epsilon(1e-6));
      CHECK(r.rotation.std == doctest::Approx(ref->rotation.std).epsilon(1e-5));
    }
  }
  // the per-axis L1 norm is invariant to translations and axis permutations
  const Pose perm{Vec3(2, -3, 1), Quat(Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ()))};
  std::vector<PoseEstimate> est_p = est;
  for (auto& e : est_p) e.pose = perm * e.pose;
  const ErrorReport p = pose_error(transformed(gt, perm), est_p, Alignment::FirstFrame);
  CHECK(p.translation.mean == doctest::Approx(base.translation.mean).epsilon(1e-6));
  CHECK(p.translation.std == doctest::Approx(base.translation.std).epsilon(1e-5));
}

TEST_CASE("missing, unmatched and no matched frames") {
  std::mt19937_64 rng(6);
  const auto gt = random_gt(rng, 10);
  auto est = as_estimates(gt);
  est.erase(est.begin() + 3);
  est.push_back({99, Pose::identity()});
  const ErrorReport r = pose_error(gt, est, Alignment::None);
  CHECK(r.n_evaluated == 9);
  CHECK(r.n_missing == 1);
  CHECK(r.n_unmatched == 1);
  CHECK(report_json(r).find("\"n_missing\": 1") != std::string::npos);
  CHECK(code_of([&] { pose_error(gt, {{50, Pose::identity()}}, Alignment::None); }) == ErrorCode::NoMatchedFrames);
}

TEST_CASE("estimate files") {
  TempDir dir("eval");
  const std::vector<PoseEstimate> est{{1, Pose{Vec3(0.1, 0.2, 0.3), Quat(0.5, 0.5, 0.5, 0.5)}},
                                      {3, Pose::from_position(Vec3(-1, 0, 1e-9))}};
  write_estimates(dir / "e.txt", est);
  const auto back = read_estimates(dir / "e.txt");
  REQUIRE(back.size() == 2);
  CHECK(back[0].frame == 1);
  CHECK(back[0].pose == est[0].pose);
  CHECK(back[1].pose == est[1].pose);

  const auto parsed = parse_estimates("# header\n\n2 0 0 0 2 0 0 0  # unnormalized\n");
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].pose.orientation.w() == 1.0);

  CHECK(code_of([] { parse_estimates("1 0 0 0 1 0 0\n"); }) == ErrorCode::MalformedDocument);
  CHECK(code_of([] { parse_estimates("1 0 0 0 1 0 0 0 7\n"); }) == ErrorCode::MalformedDocument);
  CHECK(code_of([] { parse_estimates("2 0 0 0 1 0 0 0\n1 0 0 0 1 0 0 0\n"); }) == ErrorCode::MalformedDocument);
  CHECK(code_of([] { parse_estimates("1 0 0 0 0 0 0 0\n"); }) == ErrorCode::MalformedDocument);
  CHECK(code_of([&] { read_estimates(dir / "none.txt"); }) == ErrorCode::MissingFile);
  try {
    parse_estimates("1 0 0 0 1 0 0 0\nbad line\n", "est.txt");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("est.txt:2") != std::string::npos);
  }
}

TEST_CASE("depth error: identity, constant bias, coverage, symmetry") {
  const std::vector<DepthMap> gt{constant_map(1, 8, 6, 0.1f), constant_map(2, 8, 6, 0.2f)};
  CHECK(depth_error(gt, gt).l1_mean_mm == 0.0);
  CHECK(depth_error(gt, gt).coverage == 1.0);

  std::vector<DepthMap> biased = gt;
  for (auto& m : biased)
    for (auto& d : m.depth) d += 0.002f;
  const DepthReport b = depth_error(gt, biased);
  CHECK(b.l1_mean_mm == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(format_depth_report(b).find("2.00 mm") != std::string::npos);
  CHECK(depth_error(biased, gt).l1_mean_mm == b.l1_mean_mm);

  // estimate valid on half the pixels, with a 4 mm error there
  std::vector<DepthMap> half = gt;
  for (auto& m : half)
    for (std::size_t i = 0; i < m.depth.size(); ++i)
      m.depth[i] = i % 2 ? std::numeric_limits<float>::quiet_NaN() : m.depth[i] + 0.004f;
  const DepthReport h = depth_error(gt, half);
  CHECK(h.coverage == 0.5);
  CHECK(h.valid_pixels == 48);
  CHECK(h.l1_mean_mm == doctest::Approx(4.0).epsilon(1e-4));
  for (const auto& f : h.frames) CHECK(f.coverage == 0.5);

  // ground-truth misses (background) are excluded, not counted against coverage
  std::vector<DepthMap> gt_bg = gt;
  for (auto& m : gt_bg) m.depth[0] = std::numeric_limits<float>::infinity();
  const DepthReport g = depth_error(gt_bg, gt);
  CHECK(g.valid_pixels == 94);
  CHECK(g.coverage == 1.0);

  // a missing estimate frame is counted; pooled stats use the others
  const DepthReport m = depth_error(gt, {biased[1]});
  CHECK(m.n_missing == 1);
  CHECK(m.frames.size() == 1);

  CHECK(code_of([&] { depth_error(gt, {constant_map(1, 4, 6, 0.1f)}); }) == ErrorCode::ResolutionMismatch);
  CHECK(code_of([&] { depth_error(gt, {constant_map(9, 8, 6, 0.1f)}); }) == ErrorCode::NoMatchedFrames);
}

TEST_CASE("PFM files and depth estimate directories") {
  TempDir dir("eval");
  DepthMap d{0, 5, 3, {}};
  for (int i = 0; i < 15; ++i) d.depth.push_back(0.01f * i);
  d.depth[7] = std::numeric_limits<float>::infinity();
  write_pfm(dir / "x.pfm", d);
  const DepthMap back = read_pfm(dir / "x.pfm");
  CHECK(back.width == 5);
  CHECK(back.height == 3);
  CHECK(std::memcmp(back.depth.data(), d.depth.data(), 60) == 0);

  // rows are stored bottom-up: the first raster row is the image's last row
  std::ifstream in(dir / "x.pfm", std::ios::binary);
  std::string line;
  for (int i = 0; i < 3; ++i) std::getline(in, line);
  float first = 0;
  in.read(reinterpret_cast<char*>(&first), 4);
  CHECK(first == d.depth[10]);

  std::filesystem::create_directories(dir / "est");
  write_pfm(dir / "est" / "frame_0002.pfm", d);
  write_pfm(dir / "est" / "frame_0010.pfm", d);
  const auto maps = read_depth_estimates(dir / "est");
  REQUIRE(maps.size() == 2);
  CHECK(maps[0].frame == 2);
  CHECK(maps[1].frame == 10);
  CHECK(read_depth_estimates(dir / "est" / "frame_0010.pfm")[0].frame == 10);

  std::ofstream(dir / "bad.pfm") << "PF\n1 1\n-1\nxxxxxxxxxxxx";
  CHECK(code_of([&] { read_pfm(dir / "bad.pfm"); }) == ErrorCode::UnsupportedEncoding);
  CHECK(code_of([&] { read_depth_estimates(dir / "nothing"); }) == ErrorCode::MissingFile);
}

TEST_CASE("ground truth from a recording") {
  TempDir dir("eval");
  {
    RecordingWriter w(dir / "r.ambr", "{}");
    for (std::uint64_t f = 1; f <= 3; ++f) {
      std::vector<float> depth(12, 0.1f * f);
      w.write(depth_message(depth, 4, 3, "cam_left", f, f * 33000000));
      w.write(pose_message({"cam_left", Pose::from_position(Vec3(double(f), 0, 0))}, f, f * 33000000));
      w.write(pose_message({"drill", Pose::from_position(Vec3(0, double(f), 0))}, f, f * 33000000));
      // physics-rate pose (frame 0) is not a frame sample
      w.write(pose_message({"cam_left", Pose::from_position(Vec3(-9, 0, 0))}, 0, f * 33000000 + 1));
    }
  }
  const auto traj = recorded_trajectory(dir / "r.ambr", "cam_left");
  REQUIRE(traj.size() == 3);
  CHECK(traj.at(2).position.x() == 2.0);
  CHECK(recorded_trajectory(dir / "r.ambr", "drill").at(3).position.y() == 3.0);
  CHECK(recorded_trajectory(dir / "r.ambr", "nobody").empty());

  const auto depth = recorded_depth(dir / "r.ambr");
  REQUIRE(depth.size() == 3);
  CHECK(depth[1].frame == 2);
  CHECK(depth[1].width == 4);
  CHECK(depth[1].depth[0] == 0.2f);
  CHECK(read_depth_estimates(dir / "r.ambr").size() == 3);
  CHECK(depth_error(depth, depth).l1_mean_mm == 0.0);
}
