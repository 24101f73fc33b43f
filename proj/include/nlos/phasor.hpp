#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nlos/geometry.hpp"
#include "nlos/image.hpp"

namespace nlos {

/// Virtual illumination: a Gaussian wavepacket of width sigma (seconds)
/// modulating a carrier whose wavelength is measured at the confocal
/// propagation speed c/2.
struct IlluminationSpec {
  Vec3 x_vp;
  double central_wavelength = 0.0;  // meters
  double sigma = 0.0;               // seconds

  double omega_c() const;
  /// Reporting convention for the pass band, 1 / (2 pi sigma).
  double bandwidth() const;
};

/// 4x the lateral scan spacing.
double default_central_wavelength(const ApertureGrid& grid);
/// Roughly three carrier cycles: lambda_C / (c/2) * 3 / (2 pi).
double default_sigma(double central_wavelength);
double omega_from_wavelength(double central_wavelength);

inline constexpr double kDefaultBandThreshold = 0.01;

/// Gaussian spectrum over the DFT frequencies of an nt-bin time axis. Arrays
/// are stored in FFT order: slot j holds Omega_j = 2 pi m / (nt dt) with
/// m = j for j < nt/2 and m = j - nt otherwise.
struct SpectrumWindow {
  std::size_t nt = 0;
  double bin_width = 0.0;
  double sigma = 0.0;
  double omega_c = 0.0;
  double band_threshold = kDefaultBandThreshold;
  std::vector<double> amplitudes;
  std::vector<char> band_mask;
  std::size_t peak_index = 0;

  double frequency(std::size_t j) const;
  std::size_t band_count() const;
  /// Mask slots in ascending slot order.
  std::vector<std::size_t> retained_bins() const;
};

/// Amplitude sigma sqrt(2 pi) exp(-sigma^2 (Omega - Omega_C)^2 / 2).
double gaussian_amplitude(double sigma, double omega, double omega_c);
/// d/dsigma of gaussian_amplitude.
double gaussian_amplitude_dsigma(double sigma, double omega, double omega_c);

/// Throws DegenerateWindow if fewer than 3 frequencies reach
/// band_threshold * peak.
SpectrumWindow gaussian_window(double sigma, std::size_t nt, double bin_width, double omega_c,
                               double band_threshold = kDefaultBandThreshold);

/// Window with a caller-supplied mask (used to hold the band fixed while
/// sigma varies). No degeneracy check.
SpectrumWindow gaussian_window_with_mask(double sigma, std::size_t nt, double bin_width, double omega_c,
                                         double band_threshold, std::vector<char> mask);

/// Per-slot analytic-signal weight: 2 for positive frequencies, 1 for DC and
/// Nyquist, 0 for negative frequencies.
double analytic_weight(std::size_t j, std::size_t nt);

/// Transfer function H_j = analytic_weight * amplitude * mask.
std::vector<double> filter_response(const SpectrumWindow& window);

/// Temporal filtering of every scan point's histogram with the windowed
/// analytic spectrum. Accepts real or complex input; output is complex_phasor.
TransientVolume apply_illumination(const TransientVolume& tv, const SpectrumWindow& window);

/// Adjoint of apply_illumination with respect to a complex input:
/// IFFT(conj(H) . FFT(g)). For a real input take the real part.
TransientVolume apply_illumination_adjoint(const TransientVolume& upstream, const SpectrumWindow& window);

/// Complex voxel grid produced by wave propagation, indexed as ReconGeometry.
struct ReconVolume {
  ReconGeometry geom;
  std::vector<cplx> values;
};

/// Fast Rayleigh-Sommerfeld propagation: per retained frequency and depth
/// plane, a zero-padded 2-D FFT convolution of the aperture spectrum with the
/// spherical kernel e^{j k r} / r, k = Omega / (c/2).
ReconVolume rsd_propagate(const TransientVolume& phasor, const ReconGeometry& geom, const SpectrumWindow& window);

/// Literal quadruple loop over (voxel, frequency, scan point); no FFT.
ReconVolume rsd_propagate_direct(const TransientVolume& phasor, const ReconGeometry& geom,
                                 const SpectrumWindow& window);

/// Direct evaluation restricted to the given flat voxel indices.
std::vector<cplx> rsd_evaluate_direct(const TransientVolume& phasor, const ReconGeometry& geom,
                                      const SpectrumWindow& window, std::span<const std::size_t> voxels);

/// Adjoint of rsd_propagate with respect to the time-domain phasor input:
/// backward propagation with the conjugate kernel e^{-j k r} / r followed by
/// the adjoint of the temporal DFT. Returns a complex_phasor volume.
TransientVolume rsd_adjoint(const ReconVolume& upstream, const ApertureGrid& grid, std::size_t nt,
                            const SpectrumWindow& window);

enum class RenderKind { hard, soft };

struct RenderMode {
  RenderKind kind = RenderKind::hard;
  double tau = 0.05;

  static RenderMode hard() { return {RenderKind::hard, 0.0}; }
  static RenderMode soft(double tau) { return {RenderKind::soft, tau}; }
};

struct Views {
  Image intensity;
  Image depth;
};

inline constexpr double kBackgroundIntensity = 1e-3;

/// Intensity and depth images from a volume. Hard: max over depth of |v|
/// normalized by the global max, depth of the argmax (first on ties), depth 0
/// where intensity < 1e-3. Soft: softmax over depth of |v| / (max |v| * tau).
Views render_views(const ReconVolume& vol, RenderMode mode);

/// Gradient of a scalar loss with respect to the volume through the soft
/// renderer, given dL/dI and dL/dD. Complex gradients use the convention
/// g = dL/dRe + j dL/dIm.
std::vector<cplx> render_views_soft_backward(const ReconVolume& vol, double tau, const Image& grad_intensity,
                                             const Image& grad_depth);

}  // namespace nlos
