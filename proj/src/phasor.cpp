#include "nlos/phasor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nlos/error.hpp"
#include "nlos/fft.hpp"
#include "nlos/parallel.hpp"

namespace nlos {
namespace {

constexpr double kPropagationSpeed = kSpeedOfLight / 2.0;

void check_window(const TransientVolume& tv, const SpectrumWindow& w) {
  if (w.nt != tv.nt() || w.bin_width != tv.bin_width() || w.amplitudes.size() != tv.nt()) {
    fail(ErrorCategory::ShapeMismatch, "spectrum window built for nt=" + std::to_string(w.nt) +
                                           " does not match volume nt=" + std::to_string(tv.nt()));
  }
}

void check_propagation(const TransientVolume& phasor, const ReconGeometry& geom, const SpectrumWindow& window) {
  if (!phasor.is_complex()) fail(ErrorCategory::InvalidArgument, "propagation expects a complex phasor volume");
  geom.validate();
  if (geom.nvx != phasor.nx() || geom.nvy != phasor.ny()) {
    fail(ErrorCategory::ShapeMismatch, "lateral voxel lattice " + std::to_string(geom.nvx) + "x" +
                                           std::to_string(geom.nvy) + " must match the " +
                                           std::to_string(phasor.nx()) + "x" + std::to_string(phasor.ny()) +
                                           " scan lattice");
  }
  if (!(geom.z_min > 0.0)) fail(ErrorCategory::NonPositiveDepth, "propagation needs z_min > 0");
  check_window(phasor, window);
  if (window.band_count() < 3) fail(ErrorCategory::DegenerateWindow, "fewer than 3 retained frequencies");
}

double wavenumber(const SpectrumWindow& w, std::size_t j) { return w.frequency(j) / kPropagationSpeed; }

// Aperture spectra for the retained bins: out[f][iy * nx + ix].
std::vector<std::vector<cplx>> aperture_spectra(const TransientVolume& phasor, const std::vector<std::size_t>& bins) {
  const std::size_t nscan = phasor.aperture().size();
  std::vector<std::vector<cplx>> out(bins.size(), std::vector<cplx>(nscan));
  const auto& src = phasor.phasor();
  parallel_chunks(nscan, [&](std::size_t begin, std::size_t end) {
    Fft1d fft(phasor.nt());
    std::vector<cplx> line(phasor.nt());
    for (std::size_t s = begin; s < end; ++s) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(s * phasor.nt()), phasor.nt(), line.begin());
      fft.forward(line);
      for (std::size_t f = 0; f < bins.size(); ++f) out[f][s] = line[bins[f]];
    }
  });
  return out;
}

// Spherical kernel e^{sign j k r} / r on the padded (2ny x 2nx) lattice, with
// offsets wrapped so a circular convolution reproduces the linear one.
void fill_kernel(std::vector<cplx>& kernel, std::size_t nx, std::size_t ny, double sx, double sy, double z,
                 double k, double sign) {
  const std::size_t px = 2 * nx;
  const std::size_t py = 2 * ny;
  std::fill(kernel.begin(), kernel.end(), cplx{});
  for (std::size_t wy = 0; wy < py; ++wy) {
    const long dy = wy < ny ? static_cast<long>(wy) : static_cast<long>(wy) - static_cast<long>(py);
    if (dy <= -static_cast<long>(ny)) continue;
    for (std::size_t wx = 0; wx < px; ++wx) {
      const long dx = wx < nx ? static_cast<long>(wx) : static_cast<long>(wx) - static_cast<long>(px);
      if (dx <= -static_cast<long>(nx)) continue;
      const double ox = static_cast<double>(dx) * sx;
      const double oy = static_cast<double>(dy) * sy;
      const double r = std::sqrt(ox * ox + oy * oy + z * z);
      kernel[wy * px + wx] = std::polar(1.0 / r, sign * k * r);
    }
  }
}

void pad_slice(std::vector<cplx>& padded, std::span<const cplx> slice, std::size_t nx, std::size_t ny) {
  std::fill(padded.begin(), padded.end(), cplx{});
  for (std::size_t iy = 0; iy < ny; ++iy) {
    std::copy_n(slice.begin() + static_cast<std::ptrdiff_t>(iy * nx), nx,
                padded.begin() + static_cast<std::ptrdiff_t>(iy * 2 * nx));
  }
}

}  // namespace

double omega_from_wavelength(double central_wavelength) {
  return 2.0 * std::numbers::pi * kPropagationSpeed / central_wavelength;
}

double IlluminationSpec::omega_c() const { return omega_from_wavelength(central_wavelength); }

double IlluminationSpec::bandwidth() const { return 1.0 / (2.0 * std::numbers::pi * sigma); }

double default_central_wavelength(const ApertureGrid& grid) {
  return 4.0 * std::max(grid.spacing_x(), grid.spacing_y());
}

double default_sigma(double central_wavelength) {
  return central_wavelength / kPropagationSpeed * 3.0 / (2.0 * std::numbers::pi);
}

double SpectrumWindow::frequency(std::size_t j) const {
  const long m = j < (nt + 1) / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(nt);
  return 2.0 * std::numbers::pi * static_cast<double>(m) / (static_cast<double>(nt) * bin_width);
}

std::size_t SpectrumWindow::band_count() const {
  return static_cast<std::size_t>(std::count(band_mask.begin(), band_mask.end(), char{1}));
}

std::vector<std::size_t> SpectrumWindow::retained_bins() const {
  std::vector<std::size_t> bins;
  for (std::size_t j = 0; j < band_mask.size(); ++j) {
    if (band_mask[j]) bins.push_back(j);
  }
  return bins;
}

double gaussian_amplitude(double sigma, double omega, double omega_c) {
  const double d = sigma * (omega - omega_c);
  return sigma * std::sqrt(2.0 * std::numbers::pi) * std::exp(-0.5 * d * d);
}

double gaussian_amplitude_dsigma(double sigma, double omega, double omega_c) {
  const double d = sigma * (omega - omega_c);
  return std::sqrt(2.0 * std::numbers::pi) * std::exp(-0.5 * d * d) * (1.0 - d * d);
}

SpectrumWindow gaussian_window_with_mask(double sigma, std::size_t nt, double bin_width, double omega_c,
                                         double band_threshold, std::vector<char> mask) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorCategory::InvalidArgument, "sigma must be positive");
  if (mask.size() != nt) fail(ErrorCategory::ShapeMismatch, "band mask length differs from nt");
  SpectrumWindow w;
  w.nt = nt;
  w.bin_width = bin_width;
  w.sigma = sigma;
  w.omega_c = omega_c;
  w.band_threshold = band_threshold;
  w.amplitudes.resize(nt);
  for (std::size_t j = 0; j < nt; ++j) w.amplitudes[j] = gaussian_amplitude(sigma, w.frequency(j), omega_c);
  w.peak_index = static_cast<std::size_t>(
      std::distance(w.amplitudes.begin(), std::max_element(w.amplitudes.begin(), w.amplitudes.end())));
  w.band_mask = std::move(mask);
  return w;
}

SpectrumWindow gaussian_window(double sigma, std::size_t nt, double bin_width, double omega_c,
                               double band_threshold) {
  if (!(band_threshold > 0.0 && band_threshold < 1.0)) {
    fail(ErrorCategory::InvalidArgument, "band threshold must lie in (0, 1)");
  }
  SpectrumWindow w = gaussian_window_with_mask(sigma, nt, bin_width, omega_c, band_threshold,
                                               std::vector<char>(nt, 0));
  const double cut = band_threshold * w.amplitudes[w.peak_index];
  // A window so narrow that every sampled amplitude underflows keeps nothing.
  if (!(cut > 0.0)) fail(ErrorCategory::DegenerateWindow, "window amplitude underflows on every frequency bin");
  for (std::size_t j = 0; j < nt; ++j) w.band_mask[j] = w.amplitudes[j] >= cut ? 1 : 0;
  if (w.band_count() < 3) {
    fail(ErrorCategory::DegenerateWindow,
         "only " + std::to_string(w.band_count()) + " frequencies survive the band threshold");
  }
  return w;
}

double analytic_weight(std::size_t j, std::size_t nt) {
  if (j == 0) return 1.0;
  if (nt % 2 == 0 && j == nt / 2) return 1.0;
  return j < (nt + 1) / 2 ? 2.0 : 0.0;
}

std::vector<double> filter_response(const SpectrumWindow& window) {
  std::vector<double> h(window.nt, 0.0);
  for (std::size_t j = 0; j < window.nt; ++j) {
    if (window.band_mask[j]) h[j] = analytic_weight(j, window.nt) * window.amplitudes[j];
  }
  return h;
}

namespace {

TransientVolume filter_volume(const TransientVolume& tv, const std::vector<double>& h) {
  TransientVolume out(tv.aperture(), tv.nt(), tv.bin_width(), VolumeKind::complex_phasor);
  const std::size_t nt = tv.nt();
  auto& dst = out.phasor();
  parallel_chunks(tv.aperture().size(), [&](std::size_t begin, std::size_t end) {
    Fft1d fft(nt);
    std::vector<cplx> line(nt);
    for (std::size_t s = begin; s < end; ++s) {
      const std::size_t base = s * nt;
      if (tv.is_complex()) {
        std::copy_n(tv.phasor().begin() + static_cast<std::ptrdiff_t>(base), nt, line.begin());
      } else {
        for (std::size_t t = 0; t < nt; ++t) line[t] = tv.real()[base + t];
      }
      fft.forward(line);
      for (std::size_t j = 0; j < nt; ++j) line[j] *= h[j];
      fft.inverse(line);
      std::copy(line.begin(), line.end(), dst.begin() + static_cast<std::ptrdiff_t>(base));
    }
  });
  return out;
}

}  // namespace

TransientVolume apply_illumination(const TransientVolume& tv, const SpectrumWindow& window) {
  check_window(tv, window);
  return filter_volume(tv, filter_response(window));
}

TransientVolume apply_illumination_adjoint(const TransientVolume& upstream, const SpectrumWindow& window) {
  // H is real, so conj(H) = H and the adjoint is the same filter.
  check_window(upstream, window);
  return filter_volume(upstream, filter_response(window));
}

ReconVolume rsd_propagate(const TransientVolume& phasor, const ReconGeometry& geom, const SpectrumWindow& window) {
  check_propagation(phasor, geom, window);
  const std::size_t nx = phasor.nx();
  const std::size_t ny = phasor.ny();
  const std::size_t px = 2 * nx;
  const std::size_t py = 2 * ny;
  const double sx = phasor.aperture().spacing_x();
  const double sy = phasor.aperture().spacing_y();
  const auto bins = window.retained_bins();

  // Padded aperture spectra, transformed once per frequency.
  auto spectra = aperture_spectra(phasor, bins);
  std::vector<std::vector<cplx>> padded(bins.size(), std::vector<cplx>(px * py));
  parallel_chunks(bins.size(), [&](std::size_t begin, std::size_t end) {
    Fft2d fft(py, px);
    for (std::size_t f = begin; f < end; ++f) {
      pad_slice(padded[f], spectra[f], nx, ny);
      fft.forward(padded[f]);
    }
  });

  ReconVolume vol{geom, std::vector<cplx>(geom.size())};
  // Depth planes are independent outputs; each accumulates frequencies in
  // ascending slot order, so results do not depend on the thread count.
  parallel_chunks(geom.nvz, [&](std::size_t begin, std::size_t end) {
    Fft2d fft(py, px);
    std::vector<cplx> kernel(px * py);
    for (std::size_t iz = begin; iz < end; ++iz) {
      const double z = geom.z_center(iz);
      for (std::size_t f = 0; f < bins.size(); ++f) {
        fill_kernel(kernel, nx, ny, sx, sy, z, wavenumber(window, bins[f]), 1.0);
        fft.forward(kernel);
        for (std::size_t i = 0; i < kernel.size(); ++i) kernel[i] *= padded[f][i];
        fft.inverse(kernel);
        for (std::size_t iy = 0; iy < ny; ++iy) {
          for (std::size_t ix = 0; ix < nx; ++ix) {
            vol.values[geom.index(ix, iy, iz)] += kernel[iy * px + ix];
          }
        }
      }
    }
  });
  return vol;
}

std::vector<cplx> rsd_evaluate_direct(const TransientVolume& phasor, const ReconGeometry& geom,
                                      const SpectrumWindow& window, std::span<const std::size_t> voxels) {
  check_propagation(phasor, geom, window);
  const ApertureGrid& grid = phasor.aperture();
  const std::size_t nt = phasor.nt();
  const auto bins = window.retained_bins();
  const auto centers = voxel_centers(geom, grid);
  const auto scans = scan_positions(grid);

  // Aperture spectra by the literal DFT sum.
  std::vector<std::vector<cplx>> spectra(bins.size(), std::vector<cplx>(scans.size()));
  for (std::size_t f = 0; f < bins.size(); ++f) {
    for (std::size_t s = 0; s < scans.size(); ++s) {
      cplx acc{};
      for (std::size_t n = 0; n < nt; ++n) {
        const double phase = -2.0 * std::numbers::pi * static_cast<double>(bins[f] * n % nt) /
                             static_cast<double>(nt);
        acc += phasor.phasor()[s * nt + n] * std::polar(1.0, phase);
      }
      spectra[f][s] = acc;
    }
  }

  std::vector<cplx> out(voxels.size());
  parallel_for(voxels.size(), [&](std::size_t i) {
    const Vec3 v = centers.at(voxels[i]);
    cplx acc{};
    for (std::size_t f = 0; f < bins.size(); ++f) {
      const double k = wavenumber(window, bins[f]);
      for (std::size_t s = 0; s < scans.size(); ++s) {
        const double r = norm(v - scans[s]);
        acc += spectra[f][s] * std::polar(1.0 / r, k * r);
      }
    }
    out[i] = acc;
  });
  return out;
}

ReconVolume rsd_propagate_direct(const TransientVolume& phasor, const ReconGeometry& geom,
                                 const SpectrumWindow& window) {
  std::vector<std::size_t> all(geom.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return {geom, rsd_evaluate_direct(phasor, geom, window, all)};
}

TransientVolume rsd_adjoint(const ReconVolume& upstream, const ApertureGrid& grid, std::size_t nt,
                            const SpectrumWindow& window) {
  const ReconGeometry& geom = upstream.geom;
  TransientVolume out(grid, nt, window.bin_width, VolumeKind::complex_phasor);
  check_propagation(out, geom, window);
  if (upstream.values.size() != geom.size()) fail(ErrorCategory::ShapeMismatch, "volume size mismatch");
  const std::size_t nx = grid.nx();
  const std::size_t ny = grid.ny();
  const std::size_t px = 2 * nx;
  const std::size_t py = 2 * ny;
  const auto bins = window.retained_bins();

  // Padded per-plane upstream fields, transformed once.
  std::vector<std::vector<cplx>> planes(geom.nvz, std::vector<cplx>(px * py));
  parallel_chunks(geom.nvz, [&](std::size_t begin, std::size_t end) {
    Fft2d fft(py, px);
    std::vector<cplx> slice(nx * ny);
    for (std::size_t iz = begin; iz < end; ++iz) {
      for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) slice[iy * nx + ix] = upstream.values[geom.index(ix, iy, iz)];
      }
      pad_slice(planes[iz], slice, nx, ny);
      fft.forward(planes[iz]);
    }
  });

  // Aperture-spectrum gradient per retained frequency, depths summed in order.
  std::vector<std::vector<cplx>> grad_spectra(bins.size(), std::vector<cplx>(nx * ny));
  parallel_chunks(bins.size(), [&](std::size_t begin, std::size_t end) {
    Fft2d fft(py, px);
    std::vector<cplx> kernel(px * py);
    for (std::size_t f = begin; f < end; ++f) {
      const double k = wavenumber(window, bins[f]);
      for (std::size_t iz = 0; iz < geom.nvz; ++iz) {
        fill_kernel(kernel, nx, ny, grid.spacing_x(), grid.spacing_y(), geom.z_center(iz), k, -1.0);
        fft.forward(kernel);
        for (std::size_t i = 0; i < kernel.size(); ++i) kernel[i] *= planes[iz][i];
        fft.inverse(kernel);
        for (std::size_t iy = 0; iy < ny; ++iy) {
          for (std::size_t ix = 0; ix < nx; ++ix) grad_spectra[f][iy * nx + ix] += kernel[iy * px + ix];
        }
      }
    }
  });

  // Adjoint of the forward DFT: g(n) = sum_m G(m) e^{+j 2 pi m n / N} = N * IDFT.
  auto& dst = out.phasor();
  parallel_chunks(grid.size(), [&](std::size_t begin, std::size_t end) {
    Fft1d fft(nt);
    std::vector<cplx> line(nt);
    for (std::size_t s = begin; s < end; ++s) {
      std::fill(line.begin(), line.end(), cplx{});
      for (std::size_t f = 0; f < bins.size(); ++f) line[bins[f]] = grad_spectra[f][s];
      fft.inverse(line);
      for (std::size_t n = 0; n < nt; ++n) dst[s * nt + n] = line[n] * static_cast<double>(nt);
    }
  });
  return out;
}

Views render_views(const ReconVolume& vol, RenderMode mode) {
  const ReconGeometry& g = vol.geom;
  Views views{Image(g.nvx, g.nvy), Image(g.nvx, g.nvy)};
  double global_max = 0.0;
  for (const auto& v : vol.values) global_max = std::max(global_max, std::abs(v));
  if (global_max == 0.0) return views;

  for (std::size_t iy = 0; iy < g.nvy; ++iy) {
    for (std::size_t ix = 0; ix < g.nvx; ++ix) {
      if (mode.kind == RenderKind::hard) {
        double best = -1.0;
        std::size_t best_k = 0;
        for (std::size_t iz = 0; iz < g.nvz; ++iz) {
          const double a = std::abs(vol.values[g.index(ix, iy, iz)]);
          if (a > best) {
            best = a;
            best_k = iz;
          }
        }
        const double intensity = best / global_max;
        views.intensity.at(ix, iy) = intensity;
        views.depth.at(ix, iy) = intensity < kBackgroundIntensity ? 0.0 : g.z_center(best_k);
      } else {
        double amax = 0.0;
        for (std::size_t iz = 0; iz < g.nvz; ++iz) {
          amax = std::max(amax, std::abs(vol.values[g.index(ix, iy, iz)]) / global_max);
        }
        double wsum = 0.0;
        double isum = 0.0;
        double dsum = 0.0;
        for (std::size_t iz = 0; iz < g.nvz; ++iz) {
          const double a = std::abs(vol.values[g.index(ix, iy, iz)]) / global_max;
          const double e = std::exp((a - amax) / mode.tau);
          wsum += e;
          isum += e * a;
          dsum += e * g.z_center(iz);
        }
        views.intensity.at(ix, iy) = isum / wsum;
        views.depth.at(ix, iy) = dsum / wsum;
      }
    }
  }
  return views;
}

std::vector<cplx> render_views_soft_backward(const ReconVolume& vol, double tau, const Image& grad_intensity,
                                             const Image& grad_depth) {
  const ReconGeometry& g = vol.geom;
  std::vector<cplx> grad(vol.values.size());
  std::size_t argmax = 0;
  double global_max = 0.0;
  for (std::size_t i = 0; i < vol.values.size(); ++i) {
    const double a = std::abs(vol.values[i]);
    if (a > global_max) {
      global_max = a;
      argmax = i;
    }
  }
  if (global_max == 0.0) return grad;

  // dL/da for the normalized magnitudes a = |v| / M.
  std::vector<double> da(vol.values.size(), 0.0);
  std::vector<double> w(g.nvz);
  for (std::size_t iy = 0; iy < g.nvy; ++iy) {
    for (std::size_t ix = 0; ix < g.nvx; ++ix) {
      double amax = 0.0;
      for (std::size_t iz = 0; iz < g.nvz; ++iz) {
        amax = std::max(amax, std::abs(vol.values[g.index(ix, iy, iz)]) / global_max);
      }
      double wsum = 0.0;
      for (std::size_t iz = 0; iz < g.nvz; ++iz) {
        w[iz] = std::exp((std::abs(vol.values[g.index(ix, iy, iz)]) / global_max - amax) / tau);
        wsum += w[iz];
      }
      double intensity = 0.0;
      double depth = 0.0;
      for (std::size_t iz = 0; iz < g.nvz; ++iz) {
        w[iz] /= wsum;
        intensity += w[iz] * std::abs(vol.values[g.index(ix, iy, iz)]) / global_max;
        depth += w[iz] * g.z_center(iz);
      }
      const double gi = grad_intensity.at(ix, iy);
      const double gd = grad_depth.at(ix, iy);
      for (std::size_t iz = 0; iz < g.nvz; ++iz) {
        const double a = std::abs(vol.values[g.index(ix, iy, iz)]) / global_max;
        const double di = w[iz] + w[iz] * (a - intensity) / tau;
        const double dd = w[iz] * (g.z_center(iz) - depth) / tau;
        da[g.index(ix, iy, iz)] = gi * di + gd * dd;
      }
    }
  }

  // a_i = |v_i| / M with M = |v_argmax|.
  double dmax = 0.0;
  std::vector<double> dmag(vol.values.size());
  for (std::size_t i = 0; i < vol.values.size(); ++i) {
    dmag[i] = da[i] / global_max;
    dmax -= da[i] * std::abs(vol.values[i]) / (global_max * global_max);
  }
  dmag[argmax] += dmax;
  for (std::size_t i = 0; i < vol.values.size(); ++i) {
    const double mag = std::abs(vol.values[i]);
    if (mag > 0.0) grad[i] = dmag[i] * vol.values[i] / mag;
  }
  return grad;
}

}  // namespace nlos
