#pragma once

#include "drillsim/math.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace drillsim {

enum class Alignment { None, FirstFrame };

struct PoseEstimate {
  std::uint64_t frame = 0;
  Pose pose;
};

/// Text lines `frame_id tx ty tz qw qx qy qz` (meters, unit quaternion); '#' starts a comment.
std::vector<PoseEstimate> read_estimates(const std::filesystem::path& path);
std::vector<PoseEstimate> parse_estimates(const std::string& text, const std::string& name = "<estimates>");
void write_estimates(const std::filesystem::path& path, const std::vector<PoseEstimate>& est);

/// Per-frame poses of `object` from a recording's pose topic (frame-rate messages only).
std::map<std::uint64_t, Pose> recorded_trajectory(const std::filesystem::path& recording,
                                                  const std::string& object = "camera_left");

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< population
};
MeanStd mean_std(const std::vector<double>& values);
/// "40.97 ± 22.40"
std::string format_mean_std(const MeanStd& s);

struct FramePoseError {
  std::uint64_t frame = 0;
  double translation_l1_mm = 0.0;
  double translation_l2_mm = 0.0;
  double rotation_deg = 0.0;           ///< geodesic angle
  double rotation_euler_l1_deg = 0.0;  ///< sum of per-axis Euler differences
};

struct ErrorReport {
  MeanStd translation;  ///< L1, mm
  MeanStd rotation;     ///< geodesic, degrees
  MeanStd translation_l2;
  MeanStd rotation_euler_l1;
  std::size_t n_evaluated = 0;
  std::size_t n_missing = 0;    ///< ground-truth frames without an estimate
  std::size_t n_unmatched = 0;  ///< estimates naming frames absent from the ground truth
  std::vector<FramePoseError> frames;
};

/// Throws Error(NoMatchedFrames) when no estimate matches a ground-truth frame.
ErrorReport pose_error(const std::map<std::uint64_t, Pose>& gt, const std::vector<PoseEstimate>& est,
                       Alignment alignment);
std::string format_report(const ErrorReport& r);
std::string report_json(const ErrorReport& r);

struct DepthMap {
  std::uint64_t frame = 0;
  int width = 0;
  int height = 0;
  std::vector<float> depth;  ///< meters; non-finite or <= 0 marks no value
};

struct DepthFrameError {
  std::uint64_t frame = 0;
  double l1_mm = 0.0;
  std::size_t valid = 0;
  double coverage = 0.0;
};

struct DepthReport {
  double l1_mean_mm = 0.0;  ///< pooled over every valid pixel
  double coverage = 0.0;    ///< valid pixels / pixels with a ground-truth value
  std::size_t valid_pixels = 0;
  std::size_t n_missing = 0;
  std::vector<DepthFrameError> frames;
};

/// Pixels count where both maps hold a value. Throws ResolutionMismatch or NoMatchedFrames.
DepthReport depth_error(const std::vector<DepthMap>& gt, const std::vector<DepthMap>& est);
std::string format_depth_report(const DepthReport& r);
std::string depth_report_json(const DepthReport& r);

std::vector<DepthMap> recorded_depth(const std::filesystem::path& recording);
/// A recording, a single .pfm, or a directory of .pfm files whose stem's digits give the frame id.
std::vector<DepthMap> read_depth_estimates(const std::filesystem::path& path);

DepthMap read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const DepthMap& map);

}  // namespace drillsim
