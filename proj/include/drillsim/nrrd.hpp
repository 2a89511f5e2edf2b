#pragma once

#include "drillsim/volume.hpp"

#include <filesystem>

namespace drillsim {

/// Reads a 3-D 8-bit label NRRD (raw or gzip encoding, attached or detached
/// data). Voxels with a nonzero label become fully occupied. Spacing is
/// converted to meters from "space units" (millimeters when absent).
/// Throws Error(UnsupportedEncoding) for anything else.
VoxelVolume read_nrrd_labels(const std::filesystem::path& path);

void write_nrrd_labels(const std::filesystem::path& path, const VoxelVolume& volume, bool gzip = true);

/// Deterministic, collision-free display color for a label id (black for 0).
Rgb8 palette_color(std::uint8_t label);

}  // namespace drillsim
