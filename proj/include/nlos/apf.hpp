#pragma once

#include <optional>
#include <vector>

#include "nlos/geometry.hpp"
#include "nlos/phasor.hpp"

namespace nlos {

/// Learnable illumination width. sigma(s) = dt * (1/4 + softplus(s)): the
/// parameter lives in units of the bin width and is floored at dt / 4.
struct ApfParams {
  double s = 0.0;
};

double softplus(double s);
double sigmoid(double s);

inline double apf_sigma_min(double bin_width) { return bin_width / 4.0; }
double apf_sigma(const ApfParams& params, double bin_width);
/// d sigma / d s.
double apf_dsigma(const ApfParams& params, double bin_width);
/// Inverse of apf_sigma; sigma must exceed the floor.
ApfParams apf_params_for_sigma(double sigma, double bin_width);

/// Window for the learned sigma. When `frozen_mask` is given it replaces the
/// threshold mask so the band does not move with sigma.
SpectrumWindow apf_window(const ApfParams& params, std::size_t nt, double bin_width, double omega_c,
                          double band_threshold, const std::vector<char>* frozen_mask = nullptr);

TransientVolume apf_forward(const TransientVolume& tv, const ApfParams& params, double omega_c,
                            double band_threshold, const std::vector<char>* frozen_mask = nullptr);

/// dL/ds given the complex upstream gradient of apf_forward's output
/// (g = dL/dRe + j dL/dIm), holding the band mask fixed.
double apf_backward(const TransientVolume& tv, const ApfParams& params, double omega_c, double band_threshold,
                    const TransientVolume& upstream, const std::vector<char>* frozen_mask = nullptr);

}  // namespace nlos
