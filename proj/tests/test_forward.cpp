#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <set>

#include "nlos/error.hpp"
#include "nlos/forward.hpp"
#include "support.hpp"

using namespace nlos;

namespace {
constexpr double kDt = 33e-12;

ErrorCategory category_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.category();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCategory::UsageError;
}
}  // namespace

TEST(Render, ZeroAlbedoIsZero) {
  Scene s{"dark", {{{0.1, 0.2, 0.6}, 0.0, 4.0}}};
  const auto tv = render_transient(s, ApertureGrid::centered(8, 8, 1.0), 256, kDt);
  for (double v : tv.real()) ASSERT_EQ(v, 0.0);
}

TEST(Render, UnitDistanceEverywhere) {
  // 2x2 aperture, point on the axis at distance exactly 1 from every corner.
  const double a = 0.3;
  const ApertureGrid g(2, 2, 2 * a, {-a, -a, 0});
  Scene s{"unit", {{{0, 0, std::sqrt(1 - 2 * a * a)}, 1.0, 2.0}}};
  const auto tv = render_transient(s, g, 512, kDt);
  const auto k = static_cast<std::size_t>(std::floor(2.0 / (kSpeedOfLight * kDt)));
  for (std::size_t iy = 0; iy < 2; ++iy)
    for (std::size_t ix = 0; ix < 2; ++ix) {
      double total = 0.0;
      for (std::size_t t = 0; t < 512; ++t) total += tv.at(ix, iy, t);
      EXPECT_NEAR(tv.at(ix, iy, k), 1.0, 1e-12);
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Render, FourthPowerAtTwoMeters) {
  // Scan point (0,0,0) of a 3x3 grid, point straight above at 2 m.
  const ApertureGrid g(3, 3, 0.2, {-0.1, -0.1, 0});
  Scene s{"far", {{{0, 0, 2.0}, 1.0, 4.0}}};
  const auto tv = render_transient(s, g, 512, kDt);
  EXPECT_EQ(static_cast<long>(std::floor(4.0 / (kSpeedOfLight * kDt))), 404);
  EXPECT_DOUBLE_EQ(tv.at(1, 1, 404), 0.0625);
}

TEST(Render, Linearity) {
  const auto g = ApertureGrid::centered(6, 5, 1.0);
  Scene a{"a", {{{0.1, 0.0, 0.8}, 0.7, 2.0}}};
  Scene b{"b", {{{-0.2, 0.1, 1.3}, 0.4, 4.0}, {{0.0, 0.3, 0.5}, 1.0, 1.0}}};
  Scene ab{"ab", a.points};
  ab.points.insert(ab.points.end(), b.points.begin(), b.points.end());
  const auto ta = render_transient(a, g, 512, kDt);
  const auto tb = render_transient(b, g, 512, kDt);
  const auto tab = render_transient(ab, g, 512, kDt);
  for (std::size_t i = 0; i < tab.size(); ++i) ASSERT_DOUBLE_EQ(tab.real()[i], ta.real()[i] + tb.real()[i]);
}

TEST(Render, FalloffLaw) {
  const auto g = ApertureGrid::centered(4, 4, 1.0);
  const Vec3 p{0.05, -0.1, 0.9};
  for (double z : {1.0, 2.0, 4.0}) {
    Scene s{"p", {{p, 1.0, z}}};
    const auto tv = render_transient(s, g, 512, kDt);
    const double r1 = norm(p - g.position(0, 0));
    const double r2 = norm(p - g.position(3, 2));
    const auto dg = distance_grid(512, kDt);
    const double i1 = tv.at(0, 0, dg.bin_of(r1));
    const double i2 = tv.at(3, 2, dg.bin_of(r2));
    EXPECT_NEAR(i1 / i2, std::pow(r2 / r1, z), 1e-12 * std::pow(r2 / r1, z));
  }
}

TEST(Render, OutOfWindowNamesPoint) {
  Scene s{"deep", {{{0, 0, 0.5}, 1.0, 2.0}, {{0, 0, 3.0}, 1.0, 2.0}}};
  try {
    render_transient(s, ApertureGrid::centered(4, 4, 1.0), 512, kDt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::OutOfRange);
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
}

TEST(Render, RadiometryVariants) {
  const auto g = ApertureGrid::centered(4, 4, 1.0);
  Scene s{"p", {{{0.1, 0.1, 1.2}, 0.5, 4.0}}};
  const auto plain = render_transient(s, g, 512, kDt);
  const auto flat = render_transient(s, g, 512, kDt, Radiometry::unattenuated);
  const auto comp = render_transient(s, g, 512, kDt, Radiometry::compensated_residual);
  const auto dg = distance_grid(512, kDt);
  for (std::size_t t = 0; t < 512; ++t) {
    if (plain.at(2, 1, t) == 0.0) continue;
    EXPECT_DOUBLE_EQ(flat.at(2, 1, t), 0.5);
    EXPECT_NEAR(comp.at(2, 1, t), plain.at(2, 1, t) * (1 + std::pow(dg.values[t], 4)), 1e-12);
  }
}

TEST(Scene, Validation) {
  EXPECT_EQ(category_of([] { Scene{"x", {{{0, 0, 1}, -1.0, 2.0}}}.validate(); }), ErrorCategory::InvalidArgument);
  EXPECT_EQ(category_of([] { Scene{"x", {{{0, 0, 1}, 1.0, 0.0}}}.validate(); }), ErrorCategory::InvalidArgument);
  EXPECT_EQ(category_of([] { Scene{"x", {{{0, 0, 1}, 1.0, 9.0}}}.validate(); }), ErrorCategory::InvalidArgument);
  EXPECT_EQ(category_of([] { Scene{"x", {{{0, 0, 0}, 1.0, 2.0}}}.validate(); }), ErrorCategory::InvalidArgument);
}

// ---- SPAD noise ----------------------------------------------------------------

TEST(Noise, ZeroStaysZero) {
  TransientVolume tv(ApertureGrid::centered(4, 4, 1.0), 64, kDt, VolumeKind::clean_real);
  const auto noisy = add_spad_noise(tv, NoiseConfig::from_background(0.0, 3));
  EXPECT_EQ(noisy.kind(), VolumeKind::noisy_counts);
  for (double v : noisy.real()) ASSERT_EQ(v, 0.0);
}

TEST(Noise, MeanAndVarianceOfConstantSignal) {
  TransientVolume tv(ApertureGrid::centered(25, 25, 1.0), 160, kDt, VolumeKind::clean_real);
  std::fill(tv.real().begin(), tv.real().end(), 4.0);
  const auto noisy = add_spad_noise(tv, NoiseConfig::from_background(0.0, 11));
  const double n = static_cast<double>(noisy.size());
  ASSERT_EQ(noisy.size(), 100000u);
  double mean = 0.0;
  for (double v : noisy.real()) {
    ASSERT_EQ(v, std::floor(v));
    ASSERT_GE(v, 0.0);
    mean += v;
  }
  mean /= n;
  double var = 0.0;
  for (double v : noisy.real()) var += (v - mean) * (v - mean);
  var /= n - 1;
  EXPECT_GE(mean, 3.94);
  EXPECT_LE(mean, 4.06);
  EXPECT_GE(var, 3.8);
  EXPECT_LE(var, 4.2);
}

TEST(Noise, SnrMapping) {
  TransientVolume tv(ApertureGrid::centered(4, 4, 1.0), 64, kDt, VolumeKind::clean_real);
  for (std::size_t i = 0; i < tv.size(); i += 3) tv.real()[i] = 1.0;
  EXPECT_NEAR(spad_background(tv, NoiseConfig::from_snr(10.0, 0)), 0.1, 1e-15);
  EXPECT_NEAR(spad_background(tv, NoiseConfig::from_snr(3.0, 0)), 1.0 / std::pow(10.0, 0.3), 1e-15);
  EXPECT_EQ(spad_background(tv, NoiseConfig::from_background(0.25, 0)), 0.25);
  EXPECT_EQ(category_of([&] { spad_background(tv, NoiseConfig::from_snr(-1e6, 0)); }), ErrorCategory::InvalidSnr);
  EXPECT_EQ(category_of([&] { spad_background(tv, NoiseConfig::from_snr(std::nan(""), 0)); }),
            ErrorCategory::InvalidSnr);
}

TEST(Noise, Determinism) {
  const auto tv = test::random_real_volume(6, 6, 64, 1);
  const auto a = add_spad_noise(tv, NoiseConfig::from_snr(5.0, 42));
  const auto b = add_spad_noise(tv, NoiseConfig::from_snr(5.0, 42));
  const auto c = add_spad_noise(tv, NoiseConfig::from_snr(5.0, 43));
  EXPECT_EQ(a.real(), b.real());
  EXPECT_NE(a.real(), c.real());
}

TEST(Noise, StreamSeedsDistinct) {
  std::set<std::uint64_t> seen;
  for (std::size_t iy = 0; iy < 32; ++iy)
    for (std::size_t ix = 0; ix < 32; ++ix) seen.insert(stream_seed(7, ix, iy));
  EXPECT_EQ(seen.size(), 1024u);
}

class PoissonGoodnessOfFit : public ::testing::TestWithParam<double> {};

TEST_P(PoissonGoodnessOfFit, ChiSquareAndMoments) {
  const double lambda = GetParam();
  std::mt19937_64 rng(1234);
  std::vector<std::uint64_t> samples(100000);
  double mean = 0.0;
  for (auto& s : samples) {
    s = sample_poisson(lambda, rng);
    mean += static_cast<double>(s);
  }
  const double n = static_cast<double>(samples.size());
  mean /= n;
  double var = 0.0;
  for (auto s : samples) var += (static_cast<double>(s) - mean) * (static_cast<double>(s) - mean);
  var /= n - 1;
  // sd of the sample variance for Poisson: sqrt((lambda + 2 lambda^2) / n).
  EXPECT_NEAR(mean, lambda, 3 * std::sqrt(lambda / n));
  EXPECT_NEAR(var, lambda, 3 * std::sqrt((lambda + 2 * lambda * lambda) / n));
  const auto chi = test::poisson_chi_square(samples, lambda, 0.001);
  EXPECT_TRUE(chi.pass()) << chi.statistic << " vs " << chi.critical << " dof " << chi.dof;
}

// 100 exercises the rejection branch.
INSTANTIATE_TEST_SUITE_P(Lambdas, PoissonGoodnessOfFit, ::testing::Values(0.1, 1.0, 10.0, 29.5, 100.0));

TEST(Noise, RejectionBranchMatchesInversion) {
  // Either side of the algorithm switch should give the same distribution.
  std::mt19937_64 rng(5);
  double lo = 0.0, hi = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) lo += static_cast<double>(sample_poisson(29.999, rng));
  for (int i = 0; i < n; ++i) hi += static_cast<double>(sample_poisson(30.001, rng));
  EXPECT_NEAR(lo / n, 29.999, 4 * std::sqrt(30.0 / n));
  EXPECT_NEAR(hi / n, 30.001, 4 * std::sqrt(30.0 / n));
}
