#include "drillsim/nrrd.hpp"

#include "drillsim/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace drillsim {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw Error(ErrorCode::Io, "zlib init failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf;
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(ErrorCode::UnsupportedEncoding, "corrupt gzip payload");
    }
    out.insert(out.end(), buf, buf + (sizeof buf - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> gzip_bytes(const std::vector<std::uint8_t>& in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error(ErrorCode::Io, "zlib init failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf;
    zs.avail_out = sizeof buf;
    rc = deflate(&zs, Z_FINISH);
    if (rc == Z_STREAM_ERROR) {
      deflateEnd(&zs);
      throw Error(ErrorCode::Io, "gzip failed");
    }
    out.insert(out.end(), buf, buf + (sizeof buf - zs.avail_out));
  }
  deflateEnd(&zs);
  return out;
}

std::vector<double> parse_vector(const std::string& text) {
  std::string s = text;
  std::replace_if(s.begin(), s.end(), [](char c) { return c == '(' || c == ')' || c == ','; }, ' ');
  std::istringstream is(s);
  std::vector<double> out;
  double v;
  while (is >> v) out.push_back(v);
  return out;
}

}  // namespace

Rgb8 palette_color(std::uint8_t label) {
  if (label == 0) return {0, 0, 0};
  // 97 is odd, so the red channel alone is a bijection on 1..255
  return {static_cast<std::uint8_t>((label * 97) & 0xFF), static_cast<std::uint8_t>((label * 57 + 80) & 0xFF),
          static_cast<std::uint8_t>((label * 151 + 160) & 0xFF)};
}

VoxelVolume read_nrrd_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("NRRD", 0) != 0) throw Error(ErrorCode::UnsupportedEncoding, "missing NRRD magic");

  std::map<std::string, std::string> fields;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) break;
    if (line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = trim(line.substr(0, colon));
    std::string value = line.substr(colon + 1);
    if (!value.empty() && value[0] == '=') value = value.substr(1);  // key:=value
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    fields[key] = trim(value);
  }

  const std::string type = fields["type"];
  if (type != "uchar" && type != "unsigned char" && type != "uint8" && type != "uint8_t")
    throw Error(ErrorCode::UnsupportedEncoding, "only 8-bit label volumes are supported (type: " + type + ")");
  if (fields["dimension"] != "3") throw Error(ErrorCode::UnsupportedEncoding, "expected a 3-D volume");
  const auto sizes = parse_vector(fields["sizes"]);
  if (sizes.size() != 3) throw Error(ErrorCode::UnsupportedEncoding, "bad sizes field");
  const std::string encoding = fields["encoding"];
  const bool gz = encoding == "gzip" || encoding == "gz";
  if (!gz && encoding != "raw") throw Error(ErrorCode::UnsupportedEncoding, "encoding " + encoding);

  double unit = 0.001;
  if (fields.count("space units")) {
    const std::string units = fields["space units"];
    if (units.find("\"m\"") != std::string::npos) unit = 1.0;
  }
  Vec3 spacing = Vec3::Ones();
  if (fields.count("spacings")) {
    const auto s = parse_vector(fields["spacings"]);
    if (s.size() == 3) spacing = Vec3(s[0], s[1], s[2]);
  } else if (fields.count("space directions")) {
    const auto s = parse_vector(fields["space directions"]);
    if (s.size() == 9)
      spacing = Vec3(Vec3(s[0], s[1], s[2]).norm(), Vec3(s[3], s[4], s[5]).norm(), Vec3(s[6], s[7], s[8]).norm());
  }
  spacing *= unit;
  Pose origin;
  if (fields.count("space origin")) {
    const auto o = parse_vector(fields["space origin"]);
    if (o.size() == 3) origin.position = Vec3(o[0], o[1], o[2]) * unit;
  }

  std::vector<std::uint8_t> payload;
  if (fields.count("data file")) {
    std::ifstream data(path.parent_path() / fields["data file"], std::ios::binary);
    if (!data) throw Error(ErrorCode::MissingFile, fields["data file"]);
    payload.assign(std::istreambuf_iterator<char>(data), {});
  } else {
    payload.assign(std::istreambuf_iterator<char>(in), {});
  }
  if (gz) payload = gunzip(payload);

  const VoxelDims dims{static_cast<int>(sizes[0]), static_cast<int>(sizes[1]), static_cast<int>(sizes[2])};
  if (payload.size() < dims.count()) throw Error(ErrorCode::UnsupportedEncoding, "payload shorter than sizes");
  VoxelVolume volume(dims, spacing, origin);
  for (int z = 0; z < dims.z; ++z)
    for (int y = 0; y < dims.y; ++y)
      for (int x = 0; x < dims.x; ++x) {
        const std::uint8_t id = payload[volume.linear_index(x, y, z)];
        if (id == 0) continue;
        volume.set_voxel(x, y, z, 255, id);
        if (!volume.label_table().count(id))
          volume.set_label_info(id, {"label_" + std::to_string(id), palette_color(id)});
      }
  return volume;
}

void write_nrrd_labels(const std::filesystem::path& path, const VoxelVolume& volume, bool gzip) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  const auto& d = volume.dims();
  const Vec3 s = volume.spacing() * 1000.0;
  const Vec3 o = volume.origin().position * 1000.0;
  out.precision(17);
  out << "NRRD0004\n"
      << "type: uint8\n"
      << "dimension: 3\n"
      << "space: left-posterior-superior\n"
      << "sizes: " << d.x << ' ' << d.y << ' ' << d.z << '\n'
      << "space directions: (" << s.x() << ",0,0) (0," << s.y() << ",0) (0,0," << s.z() << ")\n"
      << "space units: \"mm\" \"mm\" \"mm\"\n"
      << "space origin: (" << o.x() << ',' << o.y() << ',' << o.z() << ")\n"
      << "encoding: " << (gzip ? "gzip" : "raw") << "\n\n";
  const auto& labels = volume.label_data();
  if (gzip) {
    const auto packed = gzip_bytes(labels);
    out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  } else {
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
  }
}

}  // namespace drillsim
