#pragma once

// Per-pixel plane kernels. Every routine has a scalar reference implementation;
// SIMD variants must reproduce it bit for bit (except reductions, whose summation
// order differs and which are equivalent to within rounding).

#include "drillsim/camera.hpp"

#include <cstddef>
#include <cstdint>
#include <span>

namespace drillsim::kernels {

enum class Isa { Scalar, Avx2 };

struct AbsDiffSum {
  double sum = 0.0;
  std::size_t count = 0;
};

struct KernelTable {
  Isa isa;
  const char* name;

  /// z01 outside [0, 1) (including NaN) packs to all-zero bytes.
  void (*pack_depth)(std::span<const double> z01, std::span<PackedDepth> out);
  void (*unpack_depth)(std::span<const PackedDepth> in, std::span<double> z01);

  /// Depth linearization over rows [row_begin, row_end) of a width-wide plane.
  /// Pixels with valid[i] == 0 receive NormalizedPoint::sentinel().
  void (*unproject_rows)(const UnprojectParams& params, const double* z01, const std::uint8_t* valid,
                         int width, int row_begin, int row_end, NormalizedPoint* out);

  /// Camera-space xyz (float) per normalized point; sentinels become +inf.
  void (*rescale_points)(const UnprojectParams& params, const NormalizedPoint* in, std::size_t count,
                         float* xyz);

  /// Sum of |a - b| over indices where both are finite.
  AbsDiffSum (*masked_abs_diff)(std::span<const float> a, std::span<const float> b);
};

const KernelTable& scalar_kernels();

/// nullptr when the binary or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// Best available table. DRILLSIM_KERNELS=scalar forces the reference path.
const KernelTable& active_kernels();

}  // namespace drillsim::kernels
