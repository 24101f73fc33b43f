#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nlos/error.hpp"
#include "nlos/metrics.hpp"

using namespace nlos;

namespace {
Image ramp(std::size_t w, std::size_t h) {
  Image img(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) img.at(x, y) = static_cast<double>(y * w + x);
  return img;
}

Image random_image(std::size_t w, std::size_t h, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Image img(w, h);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : img.data) v = u(rng);
  return img;
}

Image checkerboard(std::size_t n, double a, double b) {
  Image img(n, n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) img.at(x, y) = (x + y) % 2 ? a : b;
  return img;
}

ErrorCategory category_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.category();
  }
  return ErrorCategory::UsageError;
}
}  // namespace

TEST(Crop, Examples) {
  const Image a = ramp(4, 4);
  const Image same = center_crop(a, 1.0);
  EXPECT_EQ(same.data, a.data);
  const Image c = center_crop(a, 0.5);
  ASSERT_EQ(c.width, 2u);
  EXPECT_EQ(c.data, (std::vector<double>{5, 6, 9, 10}));
  const Image big = center_crop(Image(256, 256), 0.75);
  EXPECT_EQ(big.width, 192u);
  EXPECT_EQ(big.height, 192u);
}

TEST(Crop, OddRemainderLowSide) {
  // 5 wide, fraction 0.4 -> 2 columns starting at (5 - 2) / 2 = 1.
  const Image c = center_crop(ramp(5, 5), 0.4);
  ASSERT_EQ(c.width, 2u);
  EXPECT_EQ(c.at(0, 0), 6.0);
}

TEST(Crop, Degenerate) {
  EXPECT_EQ(category_of([] { center_crop(ramp(4, 4), 0.0); }), ErrorCategory::DegenerateCrop);
  EXPECT_EQ(category_of([] { center_crop(ramp(4, 4), 0.1); }), ErrorCategory::DegenerateCrop);
  EXPECT_EQ(category_of([] { center_crop(ramp(4, 4), 1.5); }), ErrorCategory::DegenerateCrop);
  EXPECT_EQ(category_of([] { center_crop(ramp(1, 4), 1.0); }), ErrorCategory::DegenerateCrop);
}

TEST(Psnr, Examples) {
  const Image a = random_image(8, 8, 1);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_EQ(psnr_capped(psnr(a, a)), 99.0);
  Image b = a;
  for (auto& v : b.data) v += 0.1;
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
  EXPECT_EQ(psnr(checkerboard(6, 0, 1), checkerboard(6, 1, 0)), 0.0);
  EXPECT_EQ(category_of([&] { psnr(a, Image(8, 7)); }), ErrorCategory::ShapeMismatch);
}

TEST(Psnr, DecreasesWithNoise) {
  const Image ref = random_image(32, 32, 2, 0.2, 0.8);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  std::vector<double> z(ref.size());
  for (auto& v : z) v = n(rng);
  double prev = 1e9;
  for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    Image t = ref;
    for (std::size_t i = 0; i < t.size(); ++i) t.data[i] += amp * z[i];
    const double p = psnr(ref, t);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Ssim, Identity) {
  const Image a = random_image(16, 16, 4);
  EXPECT_EQ(ssim(a, a), 1.0);
}

TEST(Ssim, NegationAnticorrelated) {
  const Image a = checkerboard(16, 0.0, 1.0);
  Image neg = a;
  for (auto& v : neg.data) v = 1.0 - v;
  EXPECT_LT(ssim(a, neg), 0.0);
}

TEST(Ssim, TinyUniformOffset) {
  EXPECT_GT(ssim(Image(16, 16, 0.5), Image(16, 16, 0.5 + 1e-6)), 0.9999);
}

TEST(Ssim, ConstantShiftInvariance) {
  // The luminance term cancels exactly only where both local means agree, so
  // the pair differs by a zero-mean checkerboard.
  const Image ref = random_image(24, 24, 5, 0.3, 0.6);
  Image test = ref;
  for (std::size_t y = 0; y < 24; ++y)
    for (std::size_t x = 0; x < 24; ++x) test.at(x, y) += (x + y) % 2 ? 0.01 : -0.01;
  const double base = ssim(ref, test);
  for (double c : {0.05, 0.2, 0.35}) {
    Image r2 = ref, t2 = test;
    for (auto& v : r2.data) v += c;
    for (auto& v : t2.data) v += c;
    EXPECT_NEAR(ssim(r2, t2), base, 1e-6) << c;
  }
}

TEST(Ssim, Errors) {
  EXPECT_EQ(category_of([] { ssim(Image(10, 16), Image(10, 16)); }), ErrorCategory::TooSmall);
  EXPECT_EQ(category_of([] { ssim(Image(16, 16), Image(16, 12)); }), ErrorCategory::ShapeMismatch);
}

TEST(Ssim, Bounded) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const double v = ssim(random_image(20, 20, s), random_image(20, 20, s + 100));
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(DepthErrors, Examples) {
  const Image d = random_image(4, 4, 6);
  const std::vector<char> all(16, 1);
  const auto same = depth_errors(d, d, all);
  EXPECT_EQ(same.rmse, 0.0);
  EXPECT_EQ(same.mad, 0.0);
  Image off = d;
  for (auto& v : off.data) v += 0.1;
  const auto c = depth_errors(d, off, all);
  EXPECT_NEAR(c.rmse, 0.1, 1e-12);
  EXPECT_NEAR(c.mad, 0.1, 1e-12);
  Image two(2, 1), est(2, 1);
  est.data = {0.0, 0.2};
  const auto t = depth_errors(two, est, {1, 1});
  EXPECT_NEAR(t.rmse, 0.1414, 1e-4);
  EXPECT_NEAR(t.mad, 0.1, 1e-15);
}

TEST(DepthErrors, MaskAndJensen) {
  EXPECT_EQ(category_of([] { depth_errors(Image(2, 2), Image(2, 2), std::vector<char>(4, 0)); }),
            ErrorCategory::EmptyMask);
  Image a(2, 1), b(2, 1);
  b.data = {5.0, 0.5};
  const auto e = depth_errors(a, b, {0, 1});
  EXPECT_DOUBLE_EQ(e.mad, 0.5);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto r = depth_errors(random_image(6, 6, s), random_image(6, 6, s + 50), std::vector<char>(36, 1));
    EXPECT_GE(r.rmse, r.mad);
  }
}

TEST(DepthErrors, ForegroundMask) {
  Image gt(3, 1);
  gt.data = {0.0, 1e-3, 0.5};
  EXPECT_EQ(foreground_mask(gt), (std::vector<char>{0, 1, 1}));
}
