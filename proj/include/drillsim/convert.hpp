#pragma once

#include "drillsim/volume.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace drillsim {

struct ConvertOptions {
  std::string prefix = "slice_";
  std::optional<Vec3> spacing;  ///< stack input only; NRRD carries its own
};

/// Writes one PNG per z-plane next to `descriptor` (in "<stem>_slices/") and the
/// descriptor itself. Labels keep their ids; colors come from the palette.
VolumeSource convert_nrrd(const std::filesystem::path& nrrd, const std::filesystem::path& descriptor,
                          const ConvertOptions& options = {});

/// Describes an existing slice directory: infers prefix, count and format from
/// the file names and assigns label ids to the distinct non-black colors in
/// ascending color order. The stack is loaded once to validate it.
VolumeSource convert_stack(const std::filesystem::path& directory, const std::filesystem::path& descriptor,
                           const ConvertOptions& options = {});

}  // namespace drillsim
