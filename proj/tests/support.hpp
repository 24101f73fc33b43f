#pragma once
// Small helpers shared by the test binaries.

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nlos/geometry.hpp"

namespace nlos::test {

inline double rel_l2(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

inline TransientVolume random_real_volume(std::size_t nx, std::size_t ny, std::size_t nt, std::uint64_t seed,
                                          double dt = 33e-12) {
  TransientVolume tv(ApertureGrid::centered(nx, ny, 1.0), nt, dt, VolumeKind::clean_real);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : tv.real()) v = u(rng);
  return tv;
}

inline TransientVolume random_phasor_volume(const ApertureGrid& grid, std::size_t nt, double dt, std::uint64_t seed) {
  TransientVolume tv(grid, nt, dt, VolumeKind::complex_phasor);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : tv.phasor()) v = {n(rng), n(rng)};
  return tv;
}

/// Fresh scratch directory per test.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("nlos_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct ChiSquare {
  double statistic = 0.0;
  double critical = 0.0;  // upper quantile at the requested significance
  int dof = 0;
  bool pass() const { return statistic < critical; }
};

/// Goodness of fit of integer samples against Poisson(lambda). Cells are
/// merged from the tails inward until each expects at least 5 counts.
inline ChiSquare poisson_chi_square(const std::vector<std::uint64_t>& samples, double lambda, double alpha) {
  const boost::math::poisson_distribution<double> pois(lambda);
  const double n = static_cast<double>(samples.size());
  std::uint64_t kmax = 0;
  for (auto s : samples) kmax = std::max(kmax, s);
  // Cells [0], [1], ..., [last - 1], [last, inf).
  std::vector<double> observed(kmax + 2, 0.0);
  for (auto s : samples) observed[s] += 1.0;
  std::vector<double> expected(kmax + 2, 0.0);
  for (std::uint64_t k = 0; k <= kmax; ++k) expected[k] = n * boost::math::pdf(pois, static_cast<double>(k));
  expected[kmax + 1] = n * boost::math::cdf(boost::math::complement(pois, static_cast<double>(kmax)));

  std::vector<std::pair<double, double>> cells;  // (observed, expected)
  double o = 0.0, e = 0.0;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    o += observed[k];
    e += expected[k];
    if (e >= 5.0) {
      cells.push_back({o, e});
      o = e = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (cells.empty()) cells.push_back({0.0, 0.0});
    cells.back().first += o;
    cells.back().second += e;
  }
  ChiSquare out;
  for (const auto& [ob, ex] : cells) out.statistic += (ob - ex) * (ob - ex) / ex;
  out.dof = static_cast<int>(cells.size()) - 1;
  const boost::math::chi_squared_distribution<double> chi(std::max(out.dof, 1));
  out.critical = boost::math::quantile(boost::math::complement(chi, alpha));
  return out;
}

}  // namespace nlos::test
