#include "nlos/apf.hpp"

#include <cmath>

#include "nlos/error.hpp"
#include "nlos/fft.hpp"
#include "nlos/parallel.hpp"

namespace nlos {

double softplus(double s) {
  // log1p(exp(s)) without overflow for large s or underflow loss for small s.
  if (s > 30.0) return s + std::log1p(std::exp(-s));
  return std::log1p(std::exp(s));
}

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double apf_sigma(const ApfParams& params, double bin_width) {
  return apf_sigma_min(bin_width) + bin_width * softplus(params.s);
}

double apf_dsigma(const ApfParams& params, double bin_width) { return bin_width * sigmoid(params.s); }

ApfParams apf_params_for_sigma(double sigma, double bin_width) {
  const double x = (sigma - apf_sigma_min(bin_width)) / bin_width;
  if (!(x > 0.0)) fail(ErrorCategory::InvalidArgument, "sigma must exceed the dt/4 floor");
  // softplus^{-1}(x) = log(expm1(x))
  return {x > 30.0 ? x + std::log1p(-std::exp(-x)) : std::log(std::expm1(x))};
}

SpectrumWindow apf_window(const ApfParams& params, std::size_t nt, double bin_width, double omega_c,
                          double band_threshold, const std::vector<char>* frozen_mask) {
  const double sigma = apf_sigma(params, bin_width);
  if (frozen_mask) return gaussian_window_with_mask(sigma, nt, bin_width, omega_c, band_threshold, *frozen_mask);
  return gaussian_window(sigma, nt, bin_width, omega_c, band_threshold);
}

TransientVolume apf_forward(const TransientVolume& tv, const ApfParams& params, double omega_c,
                            double band_threshold, const std::vector<char>* frozen_mask) {
  return apply_illumination(tv, apf_window(params, tv.nt(), tv.bin_width(), omega_c, band_threshold, frozen_mask));
}

double apf_backward(const TransientVolume& tv, const ApfParams& params, double omega_c, double band_threshold,
                    const TransientVolume& upstream, const std::vector<char>* frozen_mask) {
  if (!upstream.same_shape(tv) || !upstream.is_complex()) {
    fail(ErrorCategory::ShapeMismatch, "upstream gradient must be a complex volume shaped like the input");
  }
  const SpectrumWindow window = apf_window(params, tv.nt(), tv.bin_width(), omega_c, band_threshold, frozen_mask);
  const std::size_t nt = tv.nt();

  // dH_j/dsigma with the mask and analytic weights held fixed.
  std::vector<double> dh(nt, 0.0);
  for (std::size_t j = 0; j < nt; ++j) {
    if (window.band_mask[j]) {
      dh[j] = analytic_weight(j, nt) * gaussian_amplitude_dsigma(window.sigma, window.frequency(j), omega_c);
    }
  }

  // dL/dsigma = Re sum_n conj(g_n) IDFT(dH . X)_n = Re (1/N) sum_m conj(G_m) dH_m X_m
  const std::size_t nscan = tv.aperture().size();
  std::vector<double> partial(nscan, 0.0);
  parallel_chunks(nscan, [&](std::size_t begin, std::size_t end) {
    Fft1d fft(nt);
    std::vector<cplx> x(nt);
    std::vector<cplx> g(nt);
    for (std::size_t s = begin; s < end; ++s) {
      const std::size_t base = s * nt;
      for (std::size_t t = 0; t < nt; ++t) {
        x[t] = tv.is_complex() ? tv.phasor()[base + t] : cplx(tv.real()[base + t], 0.0);
        g[t] = upstream.phasor()[base + t];
      }
      fft.forward(x);
      fft.forward(g);
      double acc = 0.0;
      for (std::size_t j = 0; j < nt; ++j) {
        if (dh[j] != 0.0) acc += (std::conj(g[j]) * x[j]).real() * dh[j];
      }
      partial[s] = acc / static_cast<double>(nt);
    }
  });
  double dsigma = 0.0;
  for (double v : partial) dsigma += v;
  return dsigma * apf_dsigma(params, tv.bin_width());
}

}  // namespace nlos
