#include "nlos/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlos/error.hpp"
#include "nlos/parallel.hpp"

namespace nlos {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t poisson_inversion(double lambda, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double p = std::exp(-lambda);
  double cdf = p;
  std::uint64_t k = 0;
  // The tail beyond ~200 has probability far below 2^-53 for lambda < 30.
  while (u > cdf && k < 1000) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

std::uint64_t poisson_ptrs(double lambda, std::mt19937_64& rng) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform01(rng) - 0.5;
    const double v = uniform01(rng);
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -lambda + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

std::string describe(const ScenePoint& p, std::size_t i) {
  std::ostringstream os;
  os << "point " << i << " at (" << p.position.x << ", " << p.position.y << ", " << p.position.z << ")";
  return os.str();
}

}  // namespace

void Scene::validate() const {
  if (points.empty()) fail(ErrorCategory::InvalidArgument, "scene '" + name + "' has no points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.albedo >= 0.0) || !std::isfinite(p.albedo)) {
      fail(ErrorCategory::InvalidArgument, describe(p, i) + ": albedo must be finite and >= 0");
    }
    if (!(p.falloff_exponent > 0.0 && p.falloff_exponent <= 8.0)) {
      fail(ErrorCategory::InvalidArgument, describe(p, i) + ": fall-off exponent must lie in (0, 8]");
    }
    if (!(p.position.z > 0.0) || !std::isfinite(p.position.x) || !std::isfinite(p.position.y)) {
      fail(ErrorCategory::InvalidArgument, describe(p, i) + ": must be finite with z > 0");
    }
  }
}

TransientVolume render_transient(const Scene& scene, const ApertureGrid& grid, std::size_t nt,
                                 double bin_width_s) {
  return render_transient(scene, grid, nt, bin_width_s, Radiometry::falloff);
}

TransientVolume render_transient(const Scene& scene, const ApertureGrid& grid, std::size_t nt,
                                 double bin_width_s, Radiometry radiometry) {
  scene.validate();
  TransientVolume tv(grid, nt, bin_width_s, VolumeKind::clean_real);
  const double r_floor = 0.5 * std::min(grid.spacing_x(), grid.spacing_y());
  const double to_bin = 2.0 / (kSpeedOfLight * bin_width_s);

  // Reject out-of-window points before any worker starts.
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const auto& p = scene.points[i];
    for (std::size_t iy = 0; iy < grid.ny(); ++iy) {
      for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
        const double r = std::max(norm(p.position - grid.position(ix, iy)), r_floor);
        if (std::floor(r * to_bin) >= static_cast<double>(nt)) {
          std::ostringstream os;
          os << describe(p, i) << " needs round trip " << 2.0 * r / kSpeedOfLight
             << " s beyond the window " << static_cast<double>(nt) * bin_width_s << " s";
          fail(ErrorCategory::OutOfRange, os.str());
        }
      }
    }
  }

  auto& data = tv.real();
  parallel_for(grid.size(), [&](std::size_t s) {
    const std::size_t ix = s % grid.nx();
    const std::size_t iy = s / grid.nx();
    const Vec3 xs = grid.position(ix, iy);
    const std::size_t base = tv.offset(ix, iy);
    for (const auto& p : scene.points) {
      const double r = std::max(norm(p.position - xs), r_floor);
      const auto k = static_cast<std::size_t>(std::floor(r * to_bin));
      double v = radiometry == Radiometry::unattenuated ? p.albedo : p.albedo / std::pow(r, p.falloff_exponent);
      if (radiometry == Radiometry::compensated_residual) {
        const double d = (static_cast<double>(k) + 0.5) / to_bin;
        v *= 1.0 + std::pow(d, p.falloff_exponent);
      }
      data[base + k] += v;
    }
  });
  return tv;
}

double spad_background(const TransientVolume& clean, const NoiseConfig& cfg) {
  if (!cfg.snr_db) {
    if (!(cfg.background >= 0.0) || !std::isfinite(cfg.background)) {
      fail(ErrorCategory::InvalidSnr, "background rate must be finite and >= 0");
    }
    return cfg.background;
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (double v : clean.real()) {
    if (v > 0.0) {
      sum += v;
      ++count;
    }
  }
  const double mean = count ? sum / static_cast<double>(count) : 0.0;
  const double b = mean / std::pow(10.0, *cfg.snr_db / 10.0);
  if (!std::isfinite(b) || b < 0.0) {
    std::ostringstream os;
    os << "snr_db " << *cfg.snr_db << " yields non-finite background " << b;
    fail(ErrorCategory::InvalidSnr, os.str());
  }
  return b;
}

std::uint64_t stream_seed(std::uint64_t seed, std::size_t ix, std::size_t iy) {
  return splitmix64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix))) ^
                    (static_cast<std::uint64_t>(iy) * 0xD1B54A32D192ED03ULL));
}

std::uint64_t sample_poisson(double lambda, std::mt19937_64& rng) {
  if (lambda <= 0.0) return 0;
  return lambda < 30.0 ? poisson_inversion(lambda, rng) : poisson_ptrs(lambda, rng);
}

TransientVolume add_spad_noise(const TransientVolume& clean, const NoiseConfig& cfg) {
  if (clean.is_complex()) {
    fail(ErrorCategory::InvalidArgument, "SPAD noise applies to real photon histograms only");
  }
  const double b = spad_background(clean, cfg);
  for (double v : clean.real()) {
    if (!(v >= 0.0)) fail(ErrorCategory::InvalidArgument, "clean transient must be non-negative");
  }
  TransientVolume out(clean.aperture(), clean.nt(), clean.bin_width(), VolumeKind::noisy_counts);
  const auto& in = clean.real();
  auto& dst = out.real();
  const std::size_t nx = clean.nx();
  parallel_for(clean.aperture().size(), [&](std::size_t s) {
    const std::size_t ix = s % nx;
    const std::size_t iy = s / nx;
    std::mt19937_64 rng(stream_seed(cfg.seed, ix, iy));
    const std::size_t base = clean.offset(ix, iy);
    for (std::size_t it = 0; it < clean.nt(); ++it) {
      dst[base + it] = static_cast<double>(sample_poisson(in[base + it] + b, rng));
    }
  });
  return out;
}

}  // namespace nlos
