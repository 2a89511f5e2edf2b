#include "drillsim/eval.hpp"

#include "drillsim/error.hpp"
#include "drillsim/recording.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace drillsim {

using json = nlohmann::json;

namespace {

double wrap(double a) { return std::remainder(a, 2.0 * kPi); }

double deg(double rad) { return rad * 180.0 / kPi; }

json stat_json(const MeanStd& s) { return {{"mean", s.mean}, {"std", s.std}}; }

bool has_value(float d) { return std::isfinite(d) && d > 0.0f; }

}  // namespace

std::vector<PoseEstimate> parse_estimates(const std::string& text, const std::string& name) {
  std::vector<PoseEstimate> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    PoseEstimate e;
    double v[7];
    std::string extra;
    if (!(ls >> e.frame >> v[0] >> v[1] >> v[2] >> v[3] >> v[4] >> v[5] >> v[6]) || (ls >> extra))
      throw Error(ErrorCode::MalformedDocument, name + ":" + std::to_string(lineno) + ": expected 'frame_id tx ty tz qw qx qy qz'");
    e.pose.position = Vec3(v[0], v[1], v[2]);
    const Quat q(v[3], v[4], v[5], v[6]);
    if (!(q.norm() > 0.0) || !is_finite(Pose{e.pose.position, q}))
      throw Error(ErrorCode::MalformedDocument, name + ":" + std::to_string(lineno) + ": invalid pose");
    e.pose.orientation = q.normalized();
    if (!out.empty() && e.frame <= out.back().frame)
      throw Error(ErrorCode::MalformedDocument, name + ":" + std::to_string(lineno) + ": frame ids must be unique and increasing");
    out.push_back(e);
  }
  return out;
}

std::vector<PoseEstimate> read_estimates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_estimates(ss.str(), path.string());
}

void write_estimates(const std::filesystem::path& path, const std::vector<PoseEstimate>& est) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& e : est) {
    const Vec3& t = e.pose.position;
    const Quat& q = e.pose.orientation;
    std::fprintf(f, "%llu %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", static_cast<unsigned long long>(e.frame), t.x(),
                 t.y(), t.z(), q.w(), q.x(), q.y(), q.z());
  }
  if (std::fclose(f) != 0) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

std::map<std::uint64_t, Pose> recorded_trajectory(const std::filesystem::path& recording, const std::string& object) {
  RecordingReader reader(recording);
  std::map<std::uint64_t, Pose> out;
  while (auto m = reader.next()) {
    if (m->topic != Topic::Pose) continue;
    const auto frame = header_frame(*m);
    if (!frame || *frame == 0) continue;
    const NamedPose p = decode_pose(*m);
    if (p.name == object) out[*frame] = p.pose;
  }
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

std::string format_mean_std(const MeanStd& s) {
  char buf[96];
  // avoid "-0.00"
  const double m = std::abs(s.mean) < 0.005 ? 0.0 : s.mean;
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", m, s.std);
  return buf;
}

ErrorReport pose_error(const std::map<std::uint64_t, Pose>& gt, const std::vector<PoseEstimate>& est,
                       Alignment alignment) {
  ErrorReport r;
  std::vector<std::pair<const Pose*, const Pose*>> matched;
  std::vector<std::uint64_t> ids;
  std::set<std::uint64_t> seen;
  for (const auto& e : est) {
    const auto it = gt.find(e.frame);
    if (it == gt.end()) {
      ++r.n_unmatched;
      continue;
    }
    if (!seen.insert(e.frame).second) continue;
    matched.emplace_back(&it->second, &e.pose);
    ids.push_back(e.frame);
  }
  if (matched.empty()) throw Error(ErrorCode::NoMatchedFrames, "no estimate matches a ground-truth frame");
  r.n_missing = gt.size() - matched.size();

  Pose align = Pose::identity();
  if (alignment == Alignment::FirstFrame) align = *matched.front().first * matched.front().second->inverse();

  std::vector<double> tl1, tl2, rg, re;
  for (std::size_t i = 0; i < matched.size(); ++i) {
    const Pose& g = *matched[i].first;
    const Pose e = align * *matched[i].second;
    FramePoseError fe;
    fe.frame = ids[i];
    const Vec3 d = (g.position - e.position) * 1000.0;
    fe.translation_l1_mm = d.cwiseAbs().sum();
    fe.translation_l2_mm = d.norm();
    fe.rotation_deg = deg(rotation_angle(g.orientation, e.orientation));
    const EulerXYZ a = euler_from_quat(g.orientation), b = euler_from_quat(e.orientation);
    fe.rotation_euler_l1_deg =
        deg(std::abs(wrap(a.roll - b.roll)) + std::abs(wrap(a.pitch - b.pitch)) + std::abs(wrap(a.yaw - b.yaw)));
    tl1.push_back(fe.translation_l1_mm);
    tl2.push_back(fe.translation_l2_mm);
    rg.push_back(fe.rotation_deg);
    re.push_back(fe.rotation_euler_l1_deg);
    r.frames.push_back(fe);
  }
  r.n_evaluated = matched.size();
  r.translation = mean_std(tl1);
  r.translation_l2 = mean_std(tl2);
  r.rotation = mean_std(rg);
  r.rotation_euler_l1 = mean_std(re);
  return r;
}

std::string format_report(const ErrorReport& r) {
  std::ostringstream out;
  out << "Translation Error (mm)    " << format_mean_std(r.translation) << " mm   [L1]\n";
  out << "Rotation Error (deg)      " << format_mean_std(r.rotation) << " deg  [geodesic]\n";
  out << "Translation L2 (mm)       " << format_mean_std(r.translation_l2) << " mm\n";
  out << "Rotation Euler L1 (deg)   " << format_mean_std(r.rotation_euler_l1) << " deg\n";
  out << "frames evaluated " << r.n_evaluated << ", missing " << r.n_missing << ", unmatched " << r.n_unmatched << "\n";
  return out.str();
}

std::string report_json(const ErrorReport& r) {
  json j;
  j["translation_l1_mm"] = stat_json(r.translation);
  j["rotation_geodesic_deg"] = stat_json(r.rotation);
  j["translation_l2_mm"] = stat_json(r.translation_l2);
  j["rotation_euler_l1_deg"] = stat_json(r.rotation_euler_l1);
  j["n_evaluated"] = r.n_evaluated;
  j["n_missing"] = r.n_missing;
  j["n_unmatched"] = r.n_unmatched;
  json frames = json::array();
  for (const auto& f : r.frames)
    frames.push_back({{"frame", f.frame},
                      {"translation_l1_mm", f.translation_l1_mm},
                      {"translation_l2_mm", f.translation_l2_mm},
                      {"rotation_deg", f.rotation_deg},
                      {"rotation_euler_l1_deg", f.rotation_euler_l1_deg}});
  j["frames"] = std::move(frames);
  return j.dump(2);
}

// ---------------------------------------------------------------- depth

DepthReport depth_error(const std::vector<DepthMap>& gt, const std::vector<DepthMap>& est) {
  std::map<std::uint64_t, const DepthMap*> by_frame;
  for (const auto& e : est) by_frame[e.frame] = &e;
  DepthReport r;
  double sum = 0.0;
  std::size_t gt_pixels = 0;
  std::size_t matched = 0;
  for (const auto& g : gt) {
    const auto it = by_frame.find(g.frame);
    if (it == by_frame.end()) {
      ++r.n_missing;
      continue;
    }
    const DepthMap& e = *it->second;
    if (e.width != g.width || e.height != g.height || e.depth.size() != g.depth.size())
      throw Error(ErrorCode::ResolutionMismatch, "frame " + std::to_string(g.frame) + ": estimate is " +
                                                     std::to_string(e.width) + "x" + std::to_string(e.height) +
                                                     ", ground truth " + std::to_string(g.width) + "x" +
                                                     std::to_string(g.height));
    ++matched;
    DepthFrameError fe;
    fe.frame = g.frame;
    double fsum = 0.0;
    std::size_t fgt = 0;
    for (std::size_t i = 0; i < g.depth.size(); ++i) {
      if (!has_value(g.depth[i])) continue;
      ++fgt;
      if (!has_value(e.depth[i])) continue;
      fsum += std::abs(static_cast<double>(g.depth[i]) - static_cast<double>(e.depth[i])) * 1000.0;
      ++fe.valid;
    }
    fe.l1_mm = fe.valid ? fsum / static_cast<double>(fe.valid) : 0.0;
    fe.coverage = fgt ? static_cast<double>(fe.valid) / static_cast<double>(fgt) : 0.0;
    sum += fsum;
    gt_pixels += fgt;
    r.valid_pixels += fe.valid;
    r.frames.push_back(fe);
  }
  if (matched == 0) throw Error(ErrorCode::NoMatchedFrames, "no depth estimate matches a ground-truth frame");
  r.l1_mean_mm = r.valid_pixels ? sum / static_cast<double>(r.valid_pixels) : 0.0;
  r.coverage = gt_pixels ? static_cast<double>(r.valid_pixels) / static_cast<double>(gt_pixels) : 0.0;
  return r;
}

std::string format_depth_report(const DepthReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "Depth L1 Error (mm)       %.2f mm\ncoverage %.4f over %zu pixels, frames %zu, missing %zu\n",
                r.l1_mean_mm, r.coverage, r.valid_pixels, r.frames.size(), r.n_missing);
  return buf;
}

std::string depth_report_json(const DepthReport& r) {
  json j;
  j["l1_mean_mm"] = r.l1_mean_mm;
  j["coverage"] = r.coverage;
  j["valid_pixels"] = r.valid_pixels;
  j["n_missing"] = r.n_missing;
  json frames = json::array();
  for (const auto& f : r.frames)
    frames.push_back({{"frame", f.frame}, {"l1_mm", f.l1_mm}, {"valid", f.valid}, {"coverage", f.coverage}});
  j["frames"] = std::move(frames);
  return j.dump(2);
}

std::vector<DepthMap> recorded_depth(const std::filesystem::path& recording) {
  RecordingReader reader(recording);
  std::vector<DepthMap> out;
  while (auto m = reader.next()) {
    if (m->topic != Topic::Depth) continue;
    DepthMap d;
    d.frame = header_frame(*m).value_or(0);
    d.depth = decode_depth(*m, &d.width, &d.height);
    out.push_back(std::move(d));
  }
  return out;
}

DepthMap read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::string magic;
  DepthMap d;
  double scale = 0.0;
  in >> magic >> d.width >> d.height >> scale;
  if (!in || magic != "Pf" || d.width <= 0 || d.height <= 0 || scale == 0.0)
    throw Error(ErrorCode::UnsupportedEncoding, path.string() + ": expected a single-channel PFM");
  in.get();  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(d.width) * d.height;
  std::vector<std::uint8_t> raw(n * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw Error(ErrorCode::TruncatedFile, path.string() + ": raster is incomplete");
  const bool little = scale < 0.0;
  d.depth.resize(n);
  for (int row = 0; row < d.height; ++row) {
    // PFM rows run bottom to top
    const std::size_t src_row = static_cast<std::size_t>(d.height - 1 - row);
    for (int x = 0; x < d.width; ++x) {
      const std::uint8_t* p = &raw[(src_row * d.width + x) * 4];
      std::uint32_t bits = little ? (p[0] | p[1] << 8 | p[2] << 16 | static_cast<std::uint32_t>(p[3]) << 24)
                                  : (p[3] | p[2] << 8 | p[1] << 16 | static_cast<std::uint32_t>(p[0]) << 24);
      float v;
      std::memcpy(&v, &bits, 4);
      d.depth[static_cast<std::size_t>(row) * d.width + x] = v;
    }
  }
  return d;
}

void write_pfm(const std::filesystem::path& path, const DepthMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "Pf\n" << map.width << " " << map.height << "\n-1.0\n";
  for (int row = map.height - 1; row >= 0; --row)
    for (int x = 0; x < map.width; ++x) {
      std::uint32_t bits;
      std::memcpy(&bits, &map.depth[static_cast<std::size_t>(row) * map.width + x], 4);
      const char b[4] = {static_cast<char>(bits), static_cast<char>(bits >> 8), static_cast<char>(bits >> 16),
                         static_cast<char>(bits >> 24)};
      out.write(b, 4);
    }
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

std::vector<DepthMap> read_depth_estimates(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  const auto frame_of = [](const fs::path& p) -> std::uint64_t {
    std::string digits;
    for (char c : p.stem().string())
      if (std::isdigit(static_cast<unsigned char>(c))) digits += c;
    return digits.empty() ? 0 : std::stoull(digits);
  };
  if (fs::is_directory(path)) {
    std::vector<DepthMap> out;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.path().extension() != ".pfm") continue;
      DepthMap d = read_pfm(entry.path());
      d.frame = frame_of(entry.path());
      out.push_back(std::move(d));
    }
    std::sort(out.begin(), out.end(), [](const DepthMap& a, const DepthMap& b) { return a.frame < b.frame; });
    return out;
  }
  if (path.extension() == ".pfm") {
    DepthMap d = read_pfm(path);
    d.frame = frame_of(path);
    return {std::move(d)};
  }
  return recorded_depth(path);
}

}  // namespace drillsim
