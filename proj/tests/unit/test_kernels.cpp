#include "drillsim/kernels.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

using namespace drillsim;
using kernels::KernelTable;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }
bool same_bits(float a, float b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<double> depth_samples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> z(n);
  for (auto& v : z) v = testutil::uniform(rng, 0.0, 1.0);
  // edge values; out-of-range ones must pack to zero
  const double edges[] = {0.0, 0.5, 1.0 - std::ldexp(1.0, -24), std::nextafter(1.0, 0.0), 1.0, -0.25,
                          std::numeric_limits<double>::quiet_NaN(), 2.0, 1e-300, 0.9999999};
  for (std::size_t i = 0; i < std::size(edges) && i * 3 < n; ++i) z[i * 3] = edges[i];
  return z;
}

const KernelTable* simd() {
  const KernelTable* t = kernels::avx2_kernels();
  if (!t) MESSAGE("AVX2 unavailable on this machine; only the scalar path is exercised");
  return t;
}

}  // namespace

TEST_CASE("scalar pack matches the per-value reference") {
  const auto& s = kernels::scalar_kernels();
  const auto z = depth_samples(4099, 1);
  std::vector<PackedDepth> out(z.size());
  s.pack_depth(z, out);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] >= 0.0 && z[i] < 1.0)
      CHECK(out[i] == pack_depth(z[i]));
    else
      CHECK(out[i] == PackedDepth{});
  }
  std::vector<double> back(z.size());
  s.unpack_depth(out, back);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(back[i] == unpack_depth(out[i]));
}

TEST_CASE("pack and unpack: SIMD equals scalar bit for bit") {
  const KernelTable* v = simd();
  if (!v) return;
  const auto& s = kernels::scalar_kernels();
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 33u, 4099u}) {
    const auto z = depth_samples(n, 2 + n);
    std::vector<PackedDepth> a(n), b(n);
    s.pack_depth(z, a);
    v->pack_depth(z, b);
    CHECK(a == b);
    std::vector<double> ua(n), ub(n);
    s.unpack_depth(a, ua);
    v->unpack_depth(a, ub);
    for (std::size_t i = 0; i < n; ++i) CHECK(same_bits(ua[i], ub[i]));
  }
}

TEST_CASE("unproject and rescale: SIMD equals scalar bit for bit") {
  const KernelTable* v = simd();
  if (!v) return;
  const auto& s = kernels::scalar_kernels();
  for (const Frustum fr : {Frustum{0.05, 0.6, kPi / 4, 37, 13}, Frustum{0.1, 10.0, 1.1, 64, 48}}) {
    const auto params = UnprojectParams::from(fr);
    const std::size_t n = static_cast<std::size_t>(fr.width) * fr.height;
    auto z = depth_samples(n, 9);
    std::vector<std::uint8_t> valid(n);
    std::mt19937_64 rng(4);
    for (std::size_t i = 0; i < n; ++i) {
      valid[i] = (rng() % 5) != 0;
      if (!(z[i] >= 0.0 && z[i] < 1.0)) z[i] = 0.25;
    }
    std::vector<NormalizedPoint> a(n), b(n);
    s.unproject_rows(params, z.data(), valid.data(), fr.width, 0, fr.height, a.data());
    v->unproject_rows(params, z.data(), valid.data(), fr.width, 0, fr.height, b.data());
    // split row ranges must agree with one full pass
    std::vector<NormalizedPoint> c(n);
    v->unproject_rows(params, z.data(), valid.data(), fr.width, 0, 5, c.data());
    v->unproject_rows(params, z.data(), valid.data(), fr.width, 5, fr.height, c.data());
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(same_bits(a[i].x, b[i].x));
      CHECK(same_bits(a[i].y, b[i].y));
      CHECK(same_bits(a[i].z, b[i].z));
      CHECK(same_bits(c[i].z, b[i].z));
      CHECK(a[i].is_valid() == bool(valid[i]));
    }
    std::vector<float> xa(3 * n), xb(3 * n);
    s.rescale_points(params, a.data(), n, xa.data());
    v->rescale_points(params, a.data(), n, xb.data());
    for (std::size_t i = 0; i < 3 * n; ++i) CHECK(same_bits(xa[i], xb[i]));
  }
}

TEST_CASE("scalar unprojection agrees with the single-pixel path") {
  const Frustum fr{0.05, 0.6, kPi / 4, 16, 12};
  const auto params = UnprojectParams::from(fr);
  std::vector<double> z(16 * 12, 0.3);
  std::vector<std::uint8_t> valid(z.size(), 1);
  std::vector<NormalizedPoint> out(z.size());
  kernels::scalar_kernels().unproject_rows(params, z.data(), valid.data(), 16, 0, 12, out.data());
  const NormalizedPoint ref = unproject_fragment(5, 7, 0.3, fr);
  CHECK(same_bits(out[7 * 16 + 5].x, ref.x));
  CHECK(same_bits(out[7 * 16 + 5].z, ref.z));
}

TEST_CASE("masked absolute difference") {
  const float inf = std::numeric_limits<float>::infinity();
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::vector<float> a{1, 2, inf, 4, nan, 6, 7, 8, 9};
  std::vector<float> b{1.5f, 2, 3, inf, 5, 4, 7, 10, nan};
  const auto r = kernels::scalar_kernels().masked_abs_diff(a, b);
  CHECK(r.count == 5);
  CHECK(r.sum == doctest::Approx(0.5 + 0 + 2 + 0 + 2));
  if (const KernelTable* v = simd()) {
    std::mt19937_64 rng(8);
    std::vector<float> x(1003), y(1003);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = static_cast<float>(testutil::uniform(rng, 0, 1));
      y[i] = (i % 7 == 0) ? inf : static_cast<float>(testutil::uniform(rng, 0, 1));
    }
    const auto rs = kernels::scalar_kernels().masked_abs_diff(x, y);
    const auto rv = v->masked_abs_diff(x, y);
    CHECK(rs.count == rv.count);
    CHECK(rv.sum == doctest::Approx(rs.sum).epsilon(1e-12));
    const auto small = v->masked_abs_diff(a, b);
    CHECK(small.count == 5);
    CHECK(small.sum == doctest::Approx(4.5));
  }
}

TEST_CASE("active table honours the scalar override") {
  const auto& t = kernels::active_kernels();
  CHECK(t.name != nullptr);
  if (kernels::avx2_kernels() == nullptr) CHECK(t.isa == kernels::Isa::Scalar);
}
