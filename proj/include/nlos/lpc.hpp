#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "nlos/geometry.hpp"

namespace nlos {

inline constexpr std::array<int, 3> kCompensationExponents{1, 2, 4};

/// Path compensation weights d[k]^r per time bin for r in {1, 2, 4}.
struct CompensationWeights {
  std::array<std::vector<double>, 3> w;

  std::size_t nt() const { return w[0].size(); }
};

CompensationWeights compensation_weights(const DistanceGrid& dg);

/// Index of `exponent` in kCompensationExponents, or -1.
int compensation_channel(int exponent);

/// Per-scan-point logits over the three compensation channels, stored
/// channel-major: logits[(c * ny + iy) * nx + ix].
struct LpcParams {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> logits;

  static LpcParams uniform(std::size_t nx, std::size_t ny);
  std::size_t index(std::size_t c, std::size_t ix, std::size_t iy) const { return (c * ny + iy) * nx + ix; }
  std::array<double, 3> probabilities(std::size_t ix, std::size_t iy) const;
  /// Channel with the highest probability (lowest index on ties).
  std::size_t argmax(std::size_t ix, std::size_t iy) const;
};

/// Residual probability-weighted compensation:
/// out = tv + sum_r softmax(logits)_r * w_r[t] * tv.
TransientVolume lpc_forward(const TransientVolume& tv, const LpcParams& params, const CompensationWeights& w);

/// Gradient of sum(upstream * lpc_forward(...)) over the logits.
std::vector<double> lpc_backward(const TransientVolume& tv, const LpcParams& params, const CompensationWeights& w,
                                 const TransientVolume& upstream);

/// Classic single-exponent compensation tv * d^r (no residual term).
TransientVolume compensate_fixed(const TransientVolume& tv, const CompensationWeights& w, int exponent);

}  // namespace nlos
