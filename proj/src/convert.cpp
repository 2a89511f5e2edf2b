#include "drillsim/convert.hpp"

#include "drillsim/error.hpp"
#include "drillsim/image_io.hpp"
#include "drillsim/nrrd.hpp"
#include "drillsim/scene.hpp"

#include <map>
#include <regex>
#include <set>

namespace drillsim {

namespace fs = std::filesystem;

VolumeSource convert_nrrd(const fs::path& nrrd, const fs::path& descriptor, const ConvertOptions& options) {
  const VoxelVolume volume = read_nrrd_labels(nrrd);
  VolumeSource src;
  const fs::path base = descriptor.parent_path().empty() ? fs::path(".") : descriptor.parent_path();
  src.directory = base / (descriptor.stem().string() + "_slices");
  src.prefix = options.prefix;
  src.count = volume.dims().z;
  src.format = "png";
  src.spacing = volume.spacing();
  src.origin = volume.origin();
  for (const auto& [id, info] : volume.label_table()) src.label_map[color_hex(info.color)] = {id, info.anatomy};
  fs::create_directories(src.directory);
  write_slice_stack(volume, src);
  write_volume_descriptor(src, descriptor);
  return src;
}

VolumeSource convert_stack(const fs::path& directory, const fs::path& descriptor, const ConvertOptions& options) {
  if (!fs::is_directory(directory)) throw Error(ErrorCode::MissingFile, directory.string() + " is not a directory");
  // name = prefix + index + extension; indices must run 0..n-1
  static const std::regex pattern(R"((.*?)(\d+)\.(png|jpe?g))", std::regex::icase);
  std::map<std::pair<std::string, std::string>, std::set<int>> groups;
  for (const auto& entry : fs::directory_iterator(directory)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    groups[{m[1].str(), m[3].str()}].insert(std::stoi(m[2].str()));
  }
  if (groups.size() != 1)
    throw Error(ErrorCode::MissingSlice, directory.string() + ": expected one slice series, found " + std::to_string(groups.size()));
  const auto& [key, indices] = *groups.begin();
  const int count = static_cast<int>(indices.size());
  if (*indices.begin() != 0 || *indices.rbegin() != count - 1)
    throw Error(ErrorCode::MissingSlice, directory.string() + ": slice indices are not contiguous from 0");

  VolumeSource src;
  src.directory = fs::absolute(directory);
  src.prefix = key.first;
  src.count = count;
  const std::string ext = key.second;
  src.format = (ext == "png" || ext == "PNG") ? "png" : "jpeg";
  if (src.format == "jpeg" && ext != "jpeg") throw Error(ErrorCode::UnsupportedEncoding, "slice files must end in .png or .jpeg");
  src.spacing = options.spacing.value_or(Vec3::Constant(0.001));

  std::set<std::uint32_t> colors;
  for (int k = 0; k < count; ++k) {
    const RgbImage img = read_image(src.slice_path(k));
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const Rgb8 c = img.at(x, y);
        if (c.r || c.g || c.b) colors.insert(static_cast<std::uint32_t>(c.r) << 16 | c.g << 8 | c.b);
      }
  }
  if (colors.size() > 255) throw Error(ErrorCode::UnsupportedEncoding, "more than 255 distinct label colors");
  int id = 1;
  for (std::uint32_t c : colors) {
    const Rgb8 rgb{static_cast<std::uint8_t>(c >> 16), static_cast<std::uint8_t>(c >> 8), static_cast<std::uint8_t>(c)};
    src.label_map[color_hex(rgb)] = {id, "label_" + std::to_string(id)};
    ++id;
  }
  (void)load_volume(src);  // validates sizes and colors
  write_volume_descriptor(src, descriptor);
  return src;
}

}  // namespace drillsim
