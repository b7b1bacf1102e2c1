#include <doctest.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstring>
#include <filesystem>

#include "mad/error.hpp"
#include "mad/latent_noise.hpp"
#include "mad/rng.hpp"

using namespace mad;

namespace {

ForegroundMask blank_mask(int frames, int w, int h) {
  return ForegroundMask{w, h, frames, std::vector<std::uint8_t>(static_cast<std::size_t>(frames) * w * h, 0)};
}

void set_px(ForegroundMask& m, int f, int x, int y) {
  m.bits[(static_cast<std::size_t>(f) * m.height + y) * m.width + x] = 1;
}

LatentTensor random_latent(const CounterRng& rng, std::uint64_t& c, LatentShape s) {
  LatentTensor t(s, DownsampleFactors{});
  for (auto& v : t.values) v = static_cast<float>(2.0 * rng.uniform(c++) - 1.0);
  return t;
}

SkeletonMask random_mask(const CounterRng& rng, std::uint64_t& c, LatentShape s, double p) {
  SkeletonMask m{s.t, s.h, s.w, std::vector<std::uint8_t>(s.cells())};
  for (auto& b : m.bits) b = rng.uniform(c++) < p;
  return m;
}

bool same_bits(float a, float b) {
  std::uint32_t x, y;
  std::memcpy(&x, &a, 4);
  std::memcpy(&y, &b, 4);
  return x == y;
}

// Asymptotic Kolmogorov p-value with the Stephens small-sample correction.
double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

double ks_uniform_statistic(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = (xs[i] - lo) / (hi - lo);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

}  // namespace

TEST_CASE("latent mask sets a cell when any pixel in its block is foreground") {
  auto m = blank_mask(1, 16, 16);
  set_px(m, 0, 15, 0);
  const auto lm = skeleton_latent_mask(m, {1, 8, 8});
  CHECK(lm.t == 1);
  CHECK(lm.h == 2);
  CHECK(lm.w == 2);
  CHECK(lm.count() == 1);
  CHECK(lm.at(0, 0, 1));
}

TEST_CASE("checkerboard foreground maps to the checkerboard of cells") {
  const int bw = 4, bh = 2, cells_x = 6, cells_y = 5;
  auto m = blank_mask(2, bw * cells_x, bh * cells_y);
  const CounterRng rng(4);
  std::uint64_t c = 0;
  for (int cy = 0; cy < cells_y; ++cy) {
    for (int cx = 0; cx < cells_x; ++cx) {
      if ((cx + cy) % 2) continue;
      const int f = static_cast<int>(rng.below(2, c));
      set_px(m, f, cx * bw + static_cast<int>(rng.below(bw, c)), cy * bh + static_cast<int>(rng.below(bh, c)));
    }
  }
  const auto lm = skeleton_latent_mask(m, {2, bh, bw});
  REQUIRE(lm.t == 1);
  for (int cy = 0; cy < cells_y; ++cy) {
    for (int cx = 0; cx < cells_x; ++cx) CHECK(lm.at(0, cy, cx) == ((cx + cy) % 2 == 0));
  }
}

TEST_CASE("trailing temporal block is padded") {
  auto m = blank_mask(5, 8, 8);
  set_px(m, 4, 0, 0);
  const auto lm = skeleton_latent_mask(m, {2, 8, 8});
  CHECK(lm.t == 3);
  CHECK(lm.at(2, 0, 0));
  CHECK_FALSE(lm.at(0, 0, 0));
}

TEST_CASE("mask and latent shape errors") {
  try {
    skeleton_latent_mask(blank_mask(1, 10, 8), {1, 8, 8});
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kShape);
  }
  CHECK_THROWS_AS(skeleton_latent_mask(blank_mask(1, 8, 8), {0, 8, 8}), Error);
  const LatentTensor lt({1, 2, 2, 4}, {});
  const SkeletonMask wrong{1, 3, 2, std::vector<std::uint8_t>(6, 1)};
  try {
    inject_targeted_noise(lt, wrong, NoiseConfig{});
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kShape);
  }
}

TEST_CASE("unmasked cells are bit-identical and masked cells change") {
  const CounterRng rng(99);
  std::uint64_t c = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const LatentShape s{1 + static_cast<int>(rng.below(3, c)), 1 + static_cast<int>(rng.below(5, c)),
                        1 + static_cast<int>(rng.below(5, c)), 1 + static_cast<int>(rng.below(4, c))};
    const auto lt = random_latent(rng, c, s);
    const auto mask = random_mask(rng, c, s, 0.4);
    const auto out = inject_targeted_noise(lt, mask, NoiseConfig{0.3, static_cast<std::uint64_t>(trial)});
    for (int t = 0; t < s.t; ++t) {
      for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
          if (mask.at(t, y, x)) continue;
          for (int ch = 0; ch < s.c; ++ch) CHECK(same_bits(out.latent.at(t, y, x, ch), lt.at(t, y, x, ch)));
        }
      }
    }
  }
}

TEST_CASE("zero sigma_max is the identity and negative sigma_max is rejected") {
  const CounterRng rng(5);
  std::uint64_t c = 0;
  const LatentShape s{2, 3, 3, 2};
  const auto lt = random_latent(rng, c, s);
  const SkeletonMask all{2, 3, 3, std::vector<std::uint8_t>(18, 1)};
  CHECK(inject_targeted_noise(lt, all, NoiseConfig{0.0, 1}).latent == lt);
  CHECK_THROWS_AS(inject_targeted_noise(lt, all, NoiseConfig{-0.1, 1}), Error);
}

TEST_CASE("noise on a cell does not depend on the rest of the mask") {
  const CounterRng rng(6);
  std::uint64_t c = 0;
  const LatentShape s{2, 4, 4, 3};
  const auto lt = random_latent(rng, c, s);
  const auto a = random_mask(rng, c, s, 0.5);
  SkeletonMask b = a;
  for (auto& bit : b.bits) bit = 1;
  const NoiseConfig cfg{0.3, 17};
  const auto ra = inject_targeted_noise(lt, a, cfg).latent;
  const auto rb = inject_targeted_noise(lt, b, cfg).latent;
  for (std::size_t i = 0; i < lt.values.size(); ++i) {
    if (a.bits[i / s.c]) CHECK(same_bits(ra.values[i], rb.values[i]));
  }
}

TEST_CASE("masked sample variance lies in the chi-square interval") {
  const int n = 512;
  const LatentShape s{1, 8, 8, 8};
  const SkeletonMask all{1, 8, 8, std::vector<std::uint8_t>(64, 1)};
  const boost::math::chi_squared chi(n - 1);
  const double lo = boost::math::quantile(chi, 0.005), hi = boost::math::quantile(chi, 0.995);
  int inside = 0;
  const int trials = 500;
  for (int trial = 0; trial < trials; ++trial) {
    const LatentTensor zero(s, {});
    const auto out = inject_targeted_noise(zero, all, NoiseConfig{0.3, 1000u + trial});
    const double sigma = out.sigmas.at(0);
    double mean = 0.0;
    for (float v : out.latent.values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (float v : out.latent.values) ss += (v - mean) * (v - mean);
    const double stat = ss / (sigma * sigma);
    inside += stat >= lo && stat <= hi;
  }
  CHECK(inside >= 0.98 * trials);
}

TEST_CASE("drawn sigma is uniform on [0, sigma_max]") {
  std::vector<double> sig;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto s = draw_sigmas(NoiseConfig{0.3, seed}, 4);
    REQUIRE(s.size() == 1);
    CHECK((s[0] >= 0.0 && s[0] < 0.3));
    sig.push_back(s[0]);
  }
  CHECK(ks_p_value(ks_uniform_statistic(sig, 0.0, 0.3), sig.size()) > 0.01);

  const auto per_frame = draw_sigmas(NoiseConfig{0.3, 1, SigmaScope::kPerFrame}, 6);
  CHECK(per_frame.size() == 6);
  CHECK(ks_p_value(ks_uniform_statistic({0.0, 0.0, 0.0, 0.0}, 0.0, 0.3), 4) < 0.01);
}

TEST_CASE("per-frame sigma scope uses one sigma per latent frame") {
  const LatentShape s{3, 4, 4, 16};
  const LatentTensor zero(s, {});
  const SkeletonMask all{3, 4, 4, std::vector<std::uint8_t>(48, 1)};
  const auto out = inject_targeted_noise(zero, all, NoiseConfig{0.3, 8, SigmaScope::kPerFrame});
  REQUIRE(out.sigmas.size() == 3);
  for (int t = 0; t < 3; ++t) {
    double ss = 0.0;
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) {
        for (int ch = 0; ch < 16; ++ch) ss += out.latent.at(t, y, x, ch) * out.latent.at(t, y, x, ch);
      }
    }
    const double ratio = ss / 256 / (out.sigmas[t] * out.sigmas[t]);
    CHECK((ratio > 0.7 && ratio < 1.3));
  }
}

TEST_CASE("noise is white across neighbouring scalars") {
  const LatentShape s{1, 32, 32, 16};
  const LatentTensor zero(s, {});
  const SkeletonMask all{1, 32, 32, std::vector<std::uint8_t>(1024, 1)};
  const auto v = inject_targeted_noise(zero, all, NoiseConfig{0.3, 3}).latent.values;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) num += double(v[i]) * v[i + 1];
  for (float x : v) den += double(x) * x;
  CHECK(std::abs(num / den) < 4.0 / std::sqrt(static_cast<double>(v.size())));
}

TEST_CASE("latent file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "mad_latent_test";
  std::filesystem::create_directories(dir);
  const CounterRng rng(1);
  std::uint64_t c = 0;
  auto lt = random_latent(rng, c, {2, 3, 4, 5});
  lt.factors = {4, 8, 8};
  write_latent(dir / "z.f32", lt);
  CHECK(std::filesystem::file_size(dir / "z.f32") == lt.values.size() * 4);
  CHECK(read_latent(dir / "z.f32") == lt);
  CHECK_THROWS_AS(read_latent(dir / "missing.f32"), Error);
  std::filesystem::remove_all(dir);
}
