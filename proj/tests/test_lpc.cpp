#include <gtest/gtest.h>

#include <cmath>

#include "nlos/error.hpp"
#include "nlos/forward.hpp"
#include "nlos/lpc.hpp"
#include "nlos/optim.hpp"
#include "support.hpp"

using namespace nlos;

namespace {
constexpr double kDt = 33e-12;

CompensationWeights weights_from(std::vector<double> d) {
  DistanceGrid dg{std::move(d), kDt};
  return compensation_weights(dg);
}

double contract(const TransientVolume& a, const TransientVolume& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.real()[i] * b.real()[i];
  return s;
}

LpcParams random_logits(std::size_t nx, std::size_t ny, std::uint64_t seed, double scale = 1.0) {
  LpcParams p = LpcParams::uniform(nx, ny);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  for (auto& l : p.logits) l = n(rng);
  return p;
}
}  // namespace

TEST(CompensationWeights, Powers) {
  const auto one = weights_from({1.0});
  EXPECT_EQ(one.w[0][0], 1.0);
  EXPECT_EQ(one.w[1][0], 1.0);
  EXPECT_EQ(one.w[2][0], 1.0);
  const auto two = weights_from({2.0});
  EXPECT_EQ(two.w[0][0], 2.0);
  EXPECT_EQ(two.w[1][0], 4.0);
  EXPECT_EQ(two.w[2][0], 16.0);
  const auto w = compensation_weights(distance_grid(512, kDt));
  // d_404 = 404.5 * c * 33 ps / 2
  EXPECT_NEAR(w.w[0][404], 2.00089, 1e-5);
  EXPECT_NEAR(w.w[2][404], 16.0285, 1e-4);
  for (std::size_t k = 0; k < 512; ++k) {
    ASSERT_GT(w.w[0][k], 0.0);
    ASSERT_NEAR(w.w[2][k], w.w[1][k] * w.w[1][k], 1e-12 * w.w[2][k]);
    ASSERT_NEAR(w.w[2][k], std::pow(w.w[0][k], 4), 1e-12 * w.w[2][k]);
  }
  EXPECT_EQ(compensation_channel(4), 2);
  EXPECT_EQ(compensation_channel(3), -1);
}

TEST(LpcParams, Simplex) {
  const auto p = random_logits(5, 4, 3, 10.0);
  for (std::size_t iy = 0; iy < 4; ++iy)
    for (std::size_t ix = 0; ix < 5; ++ix) {
      const auto pr = p.probabilities(ix, iy);
      EXPECT_NEAR(pr[0] + pr[1] + pr[2], 1.0, 1e-15);
      for (double v : pr) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  const auto u = LpcParams::uniform(2, 2);
  EXPECT_EQ(u.argmax(1, 1), 0u);  // ties -> lowest index
  for (double v : u.probabilities(0, 1)) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(LpcForward, UniformLogits) {
  const auto tv = test::random_real_volume(3, 3, 32, 1);
  const auto w = compensation_weights(distance_grid(32, kDt));
  const auto out = lpc_forward(tv, LpcParams::uniform(3, 3), w);
  for (std::size_t i = 0; i < tv.size(); ++i) {
    const std::size_t t = i % 32;
    EXPECT_NEAR(out.real()[i], tv.real()[i] * (1 + (w.w[0][t] + w.w[1][t] + w.w[2][t]) / 3), 1e-14);
  }
}

TEST(LpcForward, SaturatedSelection) {
  const auto tv = test::random_real_volume(2, 3, 64, 2);
  const auto w = compensation_weights(distance_grid(64, kDt));
  LpcParams p = LpcParams::uniform(2, 3);
  for (std::size_t iy = 0; iy < 3; ++iy)
    for (std::size_t ix = 0; ix < 2; ++ix) {
      p.logits[p.index(0, ix, iy)] = -100;
      p.logits[p.index(1, ix, iy)] = -100;
      p.logits[p.index(2, ix, iy)] = 100;
    }
  const auto out = lpc_forward(tv, p, w);
  for (std::size_t i = 0; i < tv.size(); ++i) {
    const double exact = tv.real()[i] * (1 + w.w[2][i % 64]);
    ASSERT_LE(std::abs(out.real()[i] - exact), 1e-40 * std::max(1.0, exact) + 1e-15 * exact);
  }
}

TEST(LpcForward, RestoresFourthPowerFalloff) {
  // One point 2 m straight above scan point (1,1); channel-4 selection.
  const ApertureGrid g(3, 3, 0.2, {-0.1, -0.1, 0});
  const double albedo = 0.8;
  Scene s{"p", {{{0, 0, 2.0}, albedo, 4.0}}};
  const auto tv = render_transient(s, g, 512, kDt);
  const auto w = compensation_weights(distance_grid(512, kDt));
  LpcParams p = LpcParams::uniform(3, 3);
  for (std::size_t iy = 0; iy < 3; ++iy)
    for (std::size_t ix = 0; ix < 3; ++ix) p.logits[p.index(2, ix, iy)] = 100;
  const auto out = lpc_forward(tv, p, w);
  // Residual term: albedo / r^4 + albedo * (d_k / r)^4, the second ≈ albedo.
  const double d = distance_grid(512, kDt).values[404];
  EXPECT_NEAR(out.at(1, 1, 404), albedo / 16 + albedo * std::pow(d / 2.0, 4), 1e-12);
  EXPECT_NEAR(out.at(1, 1, 404), albedo * (1 + 1.0 / 16), 0.02 * albedo);
}

TEST(LpcForward, MonotoneCompensation) {
  // Near/far two-point scene: raising the exponent raises far relative to near.
  const ApertureGrid g = ApertureGrid::centered(4, 4, 0.3);
  Scene s{"nf", {{{0, 0, 0.5}, 1.0, 4.0}, {{0, 0, 2.0}, 1.0, 4.0}}};
  const auto tv = render_transient(s, g, 512, kDt);
  const auto w = compensation_weights(distance_grid(512, kDt));
  const auto dg = distance_grid(512, kDt);
  const Vec3 xs = g.position(1, 2);
  const long kn = dg.bin_of(norm(Vec3{0, 0, 0.5} - xs));
  const long kf = dg.bin_of(norm(Vec3{0, 0, 2.0} - xs));
  double prev = 0.0;
  for (int e : kCompensationExponents) {
    const auto c = compensate_fixed(tv, w, e);
    const double ratio = c.at(1, 2, kf) / c.at(1, 2, kn);
    EXPECT_GT(ratio, prev);
    prev = ratio;
  }
}

TEST(LpcBackward, HandComputed) {
  TransientVolume tv(ApertureGrid::centered(2, 2, 1.0), 8, kDt, VolumeKind::clean_real);
  tv.at(0, 0, 0) = 1.0;
  TransientVolume up = tv;
  CompensationWeights w;
  for (auto& ch : w.w) ch.assign(8, 1.0);
  w.w[1][0] = 2.0;
  w.w[2][0] = 4.0;
  const auto g = lpc_backward(tv, LpcParams::uniform(2, 2), w, up);
  const LpcParams p = LpcParams::uniform(2, 2);
  EXPECT_NEAR(g[p.index(0, 0, 0)], -4.0 / 9.0, 1e-15);
  EXPECT_NEAR(g[p.index(1, 0, 0)], -1.0 / 9.0, 1e-15);
  EXPECT_NEAR(g[p.index(2, 0, 0)], 5.0 / 9.0, 1e-15);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (i % 4 != 0) EXPECT_EQ(g[i], 0.0);
}

TEST(LpcBackward, ZeroUpstream) {
  const auto tv = test::random_real_volume(3, 3, 16, 5);
  TransientVolume up(tv.aperture(), 16, kDt, VolumeKind::clean_real);
  const auto g = lpc_backward(tv, random_logits(3, 3, 1), compensation_weights(distance_grid(16, kDt)), up);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(LpcBackward, FiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto tv = test::random_real_volume(4, 4, 16, 10 + seed);
    const auto up = test::random_real_volume(4, 4, 16, 20 + seed);
    const auto w = compensation_weights(distance_grid(16, 2e-9));  // distances up to ~5 m
    const auto p = random_logits(4, 4, seed);
    const auto analytic = lpc_backward(tv, p, w, up);
    auto f = [&](std::span<const double> x) {
      LpcParams q = p;
      q.logits.assign(x.begin(), x.end());
      return contract(lpc_forward(tv, q, w), up);
    };
    const auto rep = finite_diff_check(f, p.logits, analytic, 1e-4);
    EXPECT_LT(rep.max_rel_error, 1e-5) << seed;
  }
}

TEST(Lpc, ShapeMismatch) {
  const auto tv = test::random_real_volume(3, 3, 16, 5);
  try {
    lpc_forward(tv, LpcParams::uniform(3, 4), compensation_weights(distance_grid(16, kDt)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::ShapeMismatch);
  }
  try {
    lpc_forward(tv, LpcParams::uniform(3, 3), compensation_weights(distance_grid(17, kDt)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::ShapeMismatch);
  }
}
