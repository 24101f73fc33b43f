#include "nlos/lpc.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "nlos/error.hpp"

namespace nlos {
namespace {

void check_shapes(const TransientVolume& tv, const LpcParams& params, const CompensationWeights& w) {
  if (tv.is_complex()) fail(ErrorCategory::InvalidArgument, "path compensation expects a real transient");
  if (params.nx != tv.nx() || params.ny != tv.ny() || params.logits.size() != 3 * tv.nx() * tv.ny()) {
    fail(ErrorCategory::ShapeMismatch, "compensation logits do not match the scan lattice");
  }
  if (w.nt() != tv.nt()) {
    fail(ErrorCategory::ShapeMismatch, "compensation weights have " + std::to_string(w.nt()) +
                                           " bins, volume has " + std::to_string(tv.nt()));
  }
}

}  // namespace

CompensationWeights compensation_weights(const DistanceGrid& dg) {
  CompensationWeights cw;
  for (auto& v : cw.w) v.resize(dg.values.size());
  for (std::size_t k = 0; k < dg.values.size(); ++k) {
    const double d = dg.values[k];
    cw.w[0][k] = d;
    cw.w[1][k] = d * d;
    cw.w[2][k] = (d * d) * (d * d);
  }
  return cw;
}

int compensation_channel(int exponent) {
  for (std::size_t c = 0; c < kCompensationExponents.size(); ++c) {
    if (kCompensationExponents[c] == exponent) return static_cast<int>(c);
  }
  return -1;
}

LpcParams LpcParams::uniform(std::size_t nx, std::size_t ny) { return {nx, ny, std::vector<double>(3 * nx * ny, 0.0)}; }

std::array<double, 3> LpcParams::probabilities(std::size_t ix, std::size_t iy) const {
  std::array<double, 3> l{logits[index(0, ix, iy)], logits[index(1, ix, iy)], logits[index(2, ix, iy)]};
  const double m = std::max({l[0], l[1], l[2]});
  double sum = 0.0;
  for (auto& v : l) {
    v = std::exp(v - m);
    sum += v;
  }
  for (auto& v : l) v /= sum;
  assert(std::abs(l[0] + l[1] + l[2] - 1.0) < 1e-12);
  return l;
}

std::size_t LpcParams::argmax(std::size_t ix, std::size_t iy) const {
  const auto p = probabilities(ix, iy);
  return static_cast<std::size_t>(std::distance(p.begin(), std::max_element(p.begin(), p.end())));
}

TransientVolume lpc_forward(const TransientVolume& tv, const LpcParams& params, const CompensationWeights& w) {
  check_shapes(tv, params, w);
  TransientVolume out(tv.aperture(), tv.nt(), tv.bin_width(), VolumeKind::clean_real);
  const auto& in = tv.real();
  auto& dst = out.real();
  for (std::size_t iy = 0; iy < tv.ny(); ++iy) {
    for (std::size_t ix = 0; ix < tv.nx(); ++ix) {
      const auto p = params.probabilities(ix, iy);
      const std::size_t base = tv.offset(ix, iy);
      for (std::size_t t = 0; t < tv.nt(); ++t) {
        const double gain = p[0] * w.w[0][t] + p[1] * w.w[1][t] + p[2] * w.w[2][t];
        dst[base + t] = in[base + t] + gain * in[base + t];
      }
    }
  }
  return out;
}

std::vector<double> lpc_backward(const TransientVolume& tv, const LpcParams& params, const CompensationWeights& w,
                                 const TransientVolume& upstream) {
  check_shapes(tv, params, w);
  if (!upstream.same_shape(tv) || upstream.is_complex()) {
    fail(ErrorCategory::ShapeMismatch, "upstream gradient must be a real volume shaped like the input");
  }
  std::vector<double> grad(params.logits.size(), 0.0);
  const auto& in = tv.real();
  const auto& up = upstream.real();
  for (std::size_t iy = 0; iy < tv.ny(); ++iy) {
    for (std::size_t ix = 0; ix < tv.nx(); ++ix) {
      const auto p = params.probabilities(ix, iy);
      const std::size_t base = tv.offset(ix, iy);
      // d gain / d logit_a = p_a (w_a - wbar)
      std::array<double, 3> acc{};
      for (std::size_t t = 0; t < tv.nt(); ++t) {
        const double g = up[base + t] * in[base + t];
        if (g == 0.0) continue;
        const double wbar = p[0] * w.w[0][t] + p[1] * w.w[1][t] + p[2] * w.w[2][t];
        for (std::size_t a = 0; a < 3; ++a) acc[a] += g * p[a] * (w.w[a][t] - wbar);
      }
      for (std::size_t a = 0; a < 3; ++a) grad[params.index(a, ix, iy)] = acc[a];
    }
  }
  return grad;
}

TransientVolume compensate_fixed(const TransientVolume& tv, const CompensationWeights& w, int exponent) {
  const int c = compensation_channel(exponent);
  if (c < 0) fail(ErrorCategory::InvalidArgument, "compensation exponent must be 1, 2 or 4");
  if (tv.is_complex()) fail(ErrorCategory::InvalidArgument, "path compensation expects a real transient");
  if (w.nt() != tv.nt()) fail(ErrorCategory::ShapeMismatch, "compensation weights do not match nt");
  TransientVolume out(tv.aperture(), tv.nt(), tv.bin_width(), VolumeKind::clean_real);
  const auto& wr = w.w[static_cast<std::size_t>(c)];
  for (std::size_t i = 0; i < tv.real().size(); ++i) out.real()[i] = tv.real()[i] * wr[i % tv.nt()];
  return out;
}

}  // namespace nlos
