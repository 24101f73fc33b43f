#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nlos/geometry.hpp"

namespace nlos {

struct ScenePoint {
  Vec3 position;
  double albedo = 1.0;
  /// Radiometric fall-off exponent z in 1/r^z (1 retro-reflective ... 4 diffuse).
  double falloff_exponent = 4.0;
};

struct Scene {
  std::string name;
  std::vector<ScenePoint> points;

  void validate() const;
};

/// Confocal, isotropic, occlusion-free renderer. Each (scan point, scene
/// point) pair deposits albedo / r^z into bin floor(2r / (c dt)); r is clamped
/// below by half the smaller lateral scan spacing.
/// Throws OutOfRange naming the first point whose round trip leaves the window.
TransientVolume render_transient(const Scene& scene, const ApertureGrid& grid, std::size_t nt,
                                 double bin_width_s);

/// What each (scan point, scene point) pair deposits into its bin k.
enum class Radiometry {
  falloff,               // albedo / r^z
  compensated_residual,  // albedo / r^z * (1 + d_k^z), each point's own exponent undone
  unattenuated,          // albedo, no fall-off at all
};

TransientVolume render_transient(const Scene& scene, const ApertureGrid& grid, std::size_t nt,
                                 double bin_width_s, Radiometry radiometry);

struct NoiseConfig {
  /// When set, the background rate is derived from the signal:
  /// B = mean(strictly positive bins) / 10^(snr_db / 10).
  std::optional<double> snr_db;
  /// Background photons per bin used when snr_db is unset.
  double background = 0.0;
  std::uint64_t seed = 0;

  static NoiseConfig from_snr(double snr_db, std::uint64_t seed) { return {snr_db, 0.0, seed}; }
  static NoiseConfig from_background(double b, std::uint64_t seed) { return {std::nullopt, b, seed}; }
};

/// Background rate B for `clean` under `cfg`; InvalidSnr if non-finite.
double spad_background(const TransientVolume& clean, const NoiseConfig& cfg);

/// Draws every bin from Poisson(H + B). Each scan point gets its own
/// generator seeded from (seed, ix, iy), so output does not depend on the
/// number of worker threads.
TransientVolume add_spad_noise(const TransientVolume& clean, const NoiseConfig& cfg);

/// Poisson sampler used by add_spad_noise: inversion for lambda < 30,
/// transformed rejection with squeeze (PTRS) above.
std::uint64_t sample_poisson(double lambda, std::mt19937_64& rng);

/// Seed of the generator for scan point (ix, iy).
std::uint64_t stream_seed(std::uint64_t seed, std::size_t ix, std::size_t iy);

}  // namespace nlos
