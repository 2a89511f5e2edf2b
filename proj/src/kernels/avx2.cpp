// AVX2 variants of the plane kernels. Compiled with -mavx2 (no FMA) so every
// lane performs the same IEEE operations, in the same order, as the scalar path.

#include "kernels_impl.hpp"

#include <immintrin.h>

#include <cmath>
#include <cstring>
#include <limits>

namespace drillsim::kernels::detail {

namespace {

inline __m256d negate(__m256d v) { return _mm256_xor_pd(v, _mm256_set1_pd(-0.0)); }

inline __m256d finite_mask(__m256d v) {
  return _mm256_cmp_pd(_mm256_sub_pd(v, v), _mm256_setzero_pd(), _CMP_EQ_OQ);
}

void pack_depth_avx2(std::span<const double> z01, std::span<PackedDepth> out) {
  const std::size_t n = z01.size();
  const __m256d scale = _mm256_set1_pd(16777216.0);
  const __m256d max_packed = _mm256_set1_pd(16777215.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d z = _mm256_loadu_pd(z01.data() + i);
    const __m256d in_range =
        _mm256_and_pd(_mm256_cmp_pd(z, zero, _CMP_GE_OQ), _mm256_cmp_pd(z, one, _CMP_LT_OQ));
    __m256d scaled = _mm256_round_pd(_mm256_mul_pd(z, scale), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    scaled = _mm256_min_pd(scaled, max_packed);
    scaled = _mm256_and_pd(scaled, in_range);
    const __m128i packed = _mm256_cvtpd_epi32(scaled);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out[i].bytes.data()), packed);
  }
  if (i < n) scalar_kernels().pack_depth(z01.subspan(i), out.subspan(i));
}

void unpack_depth_avx2(std::span<const PackedDepth> in, std::span<double> z01) {
  const std::size_t n = in.size();
  const __m256d inv_scale = _mm256_set1_pd(16777216.0);
  const __m256d two16 = _mm256_set1_pd(65536.0);
  const __m128i low_mask = _mm_set1_epi32(0xFFFF);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m128i z = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in[i].bytes.data()));
    // split into 16-bit halves so values with B3 >= 128 convert exactly
    const __m256d hi = _mm256_cvtepi32_pd(_mm_srli_epi32(z, 16));
    const __m256d lo = _mm256_cvtepi32_pd(_mm_and_si128(z, low_mask));
    const __m256d value = _mm256_add_pd(_mm256_mul_pd(hi, two16), lo);
    _mm256_storeu_pd(z01.data() + i, _mm256_div_pd(value, inv_scale));
  }
  if (i < n) scalar_kernels().unpack_depth(in.subspan(i), z01.subspan(i));
}

void unproject_rows_avx2(const UnprojectParams& p, const double* z01, const std::uint8_t* valid, int width,
                         int row_begin, int row_end, NormalizedPoint* out) {
  const auto& m = p.inv;
  __m256d mv[16];
  for (int k = 0; k < 16; ++k) mv[k] = _mm256_set1_pd(m[k]);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d w = _mm256_set1_pd(p.width);
  const __m256d half_md_x = _mm256_set1_pd(p.half_md_x);
  const __m256d half_md_y = _mm256_set1_pd(p.half_md_y);
  const __m256d md_x = _mm256_set1_pd(p.md_x);
  const __m256d md_y = _mm256_set1_pd(p.md_y);
  const __m256d near_plane = _mm256_set1_pd(p.near_plane);
  const __m256d range = _mm256_set1_pd(p.range);
  const NormalizedPoint sentinel = NormalizedPoint::sentinel();

  for (int row = row_begin; row < row_end; ++row) {
    const std::size_t base = static_cast<std::size_t>(row) * width;
    const double yn_s = 1.0 - ((row + 0.5) * 2.0) / p.height;
    const __m256d yn = _mm256_set1_pd(yn_s);
    int col = 0;
    for (; col + 4 <= width; col += 4) {
      const std::size_t i = base + col;
      const __m256d cols = _mm256_setr_pd(col, col + 1, col + 2, col + 3);
      const __m256d xn = _mm256_sub_pd(_mm256_div_pd(_mm256_mul_pd(_mm256_add_pd(cols, half), two), w), one);
      const __m256d zn = _mm256_sub_pd(_mm256_mul_pd(_mm256_loadu_pd(z01 + i), two), one);

      auto row_dot = [&](int r) {
        __m256d acc = _mm256_add_pd(_mm256_mul_pd(mv[r * 4], xn), _mm256_mul_pd(mv[r * 4 + 1], yn));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(mv[r * 4 + 2], zn));
        return _mm256_add_pd(acc, mv[r * 4 + 3]);
      };
      const __m256d cx = row_dot(0);
      const __m256d cy = row_dot(1);
      const __m256d cz = row_dot(2);
      const __m256d cw = row_dot(3);
      const __m256d px = _mm256_div_pd(cx, cw);
      const __m256d py = _mm256_div_pd(cy, cw);
      const __m256d pz = _mm256_div_pd(cz, cw);
      const __m256d nx = _mm256_div_pd(_mm256_add_pd(px, half_md_x), md_x);
      const __m256d ny = _mm256_div_pd(_mm256_add_pd(py, half_md_y), md_y);
      const __m256d nz = _mm256_div_pd(_mm256_sub_pd(negate(pz), near_plane), range);

      alignas(32) double ox[4], oy[4], oz[4];
      _mm256_store_pd(ox, nx);
      _mm256_store_pd(oy, ny);
      _mm256_store_pd(oz, nz);
      for (int k = 0; k < 4; ++k)
        out[i + k] = valid[i + k] ? NormalizedPoint{ox[k], oy[k], oz[k]} : sentinel;
    }
    for (; col < width; ++col) {
      const std::size_t i = base + col;
      out[i] = valid[i] ? unproject_with(p, col, row, z01[i]) : sentinel;
    }
  }
}

void rescale_points_avx2(const UnprojectParams& p, const NormalizedPoint* in, std::size_t count, float* xyz) {
  const __m256d md_x = _mm256_set1_pd(p.md_x);
  const __m256d md_y = _mm256_set1_pd(p.md_y);
  const __m256d half_md_x = _mm256_set1_pd(p.half_md_x);
  const __m256d half_md_y = _mm256_set1_pd(p.half_md_y);
  const __m256d near_plane = _mm256_set1_pd(p.near_plane);
  const __m256d range = _mm256_set1_pd(p.range);
  const float inf = std::numeric_limits<float>::infinity();
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d nx = _mm256_setr_pd(in[i].x, in[i + 1].x, in[i + 2].x, in[i + 3].x);
    const __m256d ny = _mm256_setr_pd(in[i].y, in[i + 1].y, in[i + 2].y, in[i + 3].y);
    const __m256d nz = _mm256_setr_pd(in[i].z, in[i + 1].z, in[i + 2].z, in[i + 3].z);
    const int ok = _mm256_movemask_pd(_mm256_and_pd(_mm256_and_pd(finite_mask(nx), finite_mask(ny)), finite_mask(nz)));
    const __m128 x = _mm256_cvtpd_ps(_mm256_sub_pd(_mm256_mul_pd(nx, md_x), half_md_x));
    const __m128 y = _mm256_cvtpd_ps(_mm256_sub_pd(_mm256_mul_pd(ny, md_y), half_md_y));
    const __m128 z = _mm256_cvtpd_ps(negate(_mm256_add_pd(near_plane, _mm256_mul_pd(nz, range))));
    alignas(16) float ox[4], oy[4], oz[4];
    _mm_store_ps(ox, x);
    _mm_store_ps(oy, y);
    _mm_store_ps(oz, z);
    for (int k = 0; k < 4; ++k) {
      float* dst = xyz + 3 * (i + k);
      if (ok & (1 << k)) {
        dst[0] = ox[k];
        dst[1] = oy[k];
        dst[2] = oz[k];
      } else {
        dst[0] = dst[1] = dst[2] = inf;
      }
    }
  }
  if (i < count) scalar_kernels().rescale_points(p, in + i, count - i, xyz + 3 * i);
}

AbsDiffSum masked_abs_diff_avx2(std::span<const float> a, std::span<const float> b) {
  const std::size_t n = a.size();
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFLL));
  __m256d acc = _mm256_setzero_pd();
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(a.data() + i));
    const __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(b.data() + i));
    const __m256d ok = _mm256_and_pd(finite_mask(va), finite_mask(vb));
    const __m256d diff = _mm256_and_pd(_mm256_sub_pd(va, vb), abs_mask);
    acc = _mm256_add_pd(acc, _mm256_and_pd(diff, ok));
    count += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(ok)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  AbsDiffSum out{(lanes[0] + lanes[1]) + (lanes[2] + lanes[3]), count};
  if (i < n) {
    const AbsDiffSum tail = scalar_kernels().masked_abs_diff(a.subspan(i), b.subspan(i));
    out.sum += tail.sum;
    out.count += tail.count;
  }
  return out;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::Avx2,         "avx2",
                                 pack_depth_avx2,   unpack_depth_avx2,
                                 unproject_rows_avx2, rescale_points_avx2,
                                 masked_abs_diff_avx2};
  return table;
}

}  // namespace drillsim::kernels::detail
