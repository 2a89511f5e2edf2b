#include "kernels_impl.hpp"

#include <cmath>
#include <cstring>
#include <limits>

namespace drillsim::kernels {

namespace {

void pack_depth_scalar(std::span<const double> z01, std::span<PackedDepth> out) {
  for (std::size_t i = 0; i < z01.size(); ++i) {
    const double z = z01[i];
    std::uint32_t packed = 0;
    if (z >= 0.0 && z < 1.0) {
      const double scaled = std::nearbyint(z * 16777216.0);
      packed = static_cast<std::uint32_t>(scaled < 16777215.0 ? scaled : 16777215.0);
    }
    std::memcpy(out[i].bytes.data(), &packed, 4);
  }
}

void unpack_depth_scalar(std::span<const PackedDepth> in, std::span<double> z01) {
  for (std::size_t i = 0; i < in.size(); ++i) {
    std::uint32_t z;
    std::memcpy(&z, in[i].bytes.data(), 4);
    z01[i] = static_cast<double>(z) / 16777216.0;
  }
}

void unproject_rows_scalar(const UnprojectParams& params, const double* z01, const std::uint8_t* valid,
                           int width, int row_begin, int row_end, NormalizedPoint* out) {
  for (int row = row_begin; row < row_end; ++row) {
    const std::size_t base = static_cast<std::size_t>(row) * width;
    for (int col = 0; col < width; ++col) {
      const std::size_t i = base + col;
      out[i] = valid[i] ? unproject_with(params, col, row, z01[i]) : NormalizedPoint::sentinel();
    }
  }
}

void rescale_points_scalar(const UnprojectParams& params, const NormalizedPoint* in, std::size_t count,
                           float* xyz) {
  const float inf = std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    if (!in[i].is_valid()) {
      xyz[3 * i] = xyz[3 * i + 1] = xyz[3 * i + 2] = inf;
      continue;
    }
    double p[3];
    rescale_with(params, in[i], p);
    xyz[3 * i] = static_cast<float>(p[0]);
    xyz[3 * i + 1] = static_cast<float>(p[1]);
    xyz[3 * i + 2] = static_cast<float>(p[2]);
  }
}

AbsDiffSum masked_abs_diff_scalar(std::span<const float> a, std::span<const float> b) {
  AbsDiffSum acc;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) continue;
    acc.sum += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    ++acc.count;
  }
  return acc;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar,        "scalar",
                                 pack_depth_scalar,  unpack_depth_scalar,
                                 unproject_rows_scalar, rescale_points_scalar,
                                 masked_abs_diff_scalar};
  return table;
}

}  // namespace drillsim::kernels
