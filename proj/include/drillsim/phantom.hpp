#pragma once

#include "drillsim/volume.hpp"

#include <cstdint>
#include <filesystem>

namespace drillsim {

/// Label ids used by the synthetic phantom.
namespace phantom_labels {
inline constexpr std::uint8_t kBone = 1;
inline constexpr std::uint8_t kNerve = 2;
inline constexpr std::uint8_t kCochlea = 3;
inline constexpr std::uint8_t kSinus = 4;
inline constexpr std::uint8_t kDrill = 10;
}  // namespace phantom_labels

struct PhantomOptions {
  int size = 256;           ///< voxels per axis
  double spacing = 0.0005;  ///< m
  std::uint64_t seed = 0;   ///< places the air cells
};

/// A bone block with an undulating top surface, embedded nerve, cochlea and
/// sinus structures and a few empty air cells. The volume is centered on the
/// world origin.
VoxelVolume make_phantom_volume(const PhantomOptions& opts);

/// Writes a complete scene (launch, world, input devices, patient and drill
/// models, slice stack under slices/) and returns the launch file path.
std::filesystem::path write_phantom_scene(const std::filesystem::path& dir, const PhantomOptions& opts);

}  // namespace drillsim
