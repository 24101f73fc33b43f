#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace nlos {

inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s

using cplx = std::complex<double>;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double norm(Vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

/// Planar scan lattice on the relay wall (z = 0). Scan point (ix, iy) sits at
/// origin + (ix * spacing_x, iy * spacing_y, 0) with spacing = extent / (n - 1).
class ApertureGrid {
 public:
  ApertureGrid(std::size_t nx, std::size_t ny, double extent_m, Vec3 origin_m);

  /// Square aperture centered on the wall origin.
  static ApertureGrid centered(std::size_t nx, std::size_t ny, double extent_m);

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }
  double extent() const { return extent_; }
  Vec3 origin() const { return origin_; }
  double spacing_x() const { return extent_ / static_cast<double>(nx_ - 1); }
  double spacing_y() const { return extent_ / static_cast<double>(ny_ - 1); }

  Vec3 position(std::size_t ix, std::size_t iy) const {
    return {origin_.x + static_cast<double>(ix) * spacing_x(),
            origin_.y + static_cast<double>(iy) * spacing_y(), 0.0};
  }

  friend bool operator==(const ApertureGrid&, const ApertureGrid&) = default;

 private:
  std::size_t nx_;
  std::size_t ny_;
  double extent_;
  Vec3 origin_;
};

/// Row-major (iy outer, ix inner) list of scan positions.
std::vector<Vec3> scan_positions(const ApertureGrid& grid);

enum class VolumeKind : unsigned char { clean_real = 0, noisy_counts = 1, complex_phasor = 2 };

/// Time-resolved histogram over the scan aperture. Storage is row-major
/// (iy, ix, it) with time fastest; real kinds live in `real()`, the complex
/// phasor kind in `phasor()`.
class TransientVolume {
 public:
  TransientVolume(ApertureGrid aperture, std::size_t nt, double bin_width_s, VolumeKind kind);

  const ApertureGrid& aperture() const { return aperture_; }
  std::size_t nx() const { return aperture_.nx(); }
  std::size_t ny() const { return aperture_.ny(); }
  std::size_t nt() const { return nt_; }
  double bin_width() const { return bin_width_; }
  VolumeKind kind() const { return kind_; }
  bool is_complex() const { return kind_ == VolumeKind::complex_phasor; }
  std::size_t size() const { return aperture_.size() * nt_; }

  std::size_t index(std::size_t ix, std::size_t iy, std::size_t it) const {
    return (iy * aperture_.nx() + ix) * nt_ + it;
  }
  /// Offset of the first time bin of scan point (ix, iy).
  std::size_t offset(std::size_t ix, std::size_t iy) const { return index(ix, iy, 0); }

  std::vector<double>& real() { return real_; }
  const std::vector<double>& real() const { return real_; }
  std::vector<cplx>& phasor() { return phasor_; }
  const std::vector<cplx>& phasor() const { return phasor_; }

  double& at(std::size_t ix, std::size_t iy, std::size_t it) { return real_[index(ix, iy, it)]; }
  double at(std::size_t ix, std::size_t iy, std::size_t it) const { return real_[index(ix, iy, it)]; }

  /// Same geometry and time axis (kind may differ).
  bool same_shape(const TransientVolume& other) const;

  /// Relabels a real volume; the data must satisfy the target kind's invariant.
  void set_kind(VolumeKind kind);

 private:
  ApertureGrid aperture_;
  std::size_t nt_;
  double bin_width_;
  VolumeKind kind_;
  std::vector<double> real_;
  std::vector<cplx> phasor_;
};

/// Discretized hidden volume. The lateral lattice coincides with the scan
/// lattice (voxel (i, j) lies above scan point (i, j) when counts match), the
/// axial lattice uses cell centers z_min + (k + 0.5) * dz.
struct ReconGeometry {
  std::size_t nvx = 2;
  std::size_t nvy = 2;
  std::size_t nvz = 2;
  double z_min = 0.25;
  double z_max = 2.25;

  void validate() const;
  std::size_t size() const { return nvx * nvy * nvz; }
  double dz() const { return (z_max - z_min) / static_cast<double>(nvz); }
  double z_center(std::size_t k) const { return z_min + (static_cast<double>(k) + 0.5) * dz(); }
  /// Flat index, depth fastest: ((iy * nvx) + ix) * nvz + iz.
  std::size_t index(std::size_t ix, std::size_t iy, std::size_t iz) const {
    return (iy * nvx + ix) * nvz + iz;
  }
};

/// Lateral lattice spacing and matching voxel lattice.
ReconGeometry recon_geometry_for(const ApertureGrid& grid, std::size_t nvz, double z_min, double z_max);

/// Voxel centers in ReconGeometry::index order.
std::vector<Vec3> voxel_centers(const ReconGeometry& geom, const ApertureGrid& grid);

/// One-way distance per temporal bin for confocal round trips.
struct DistanceGrid {
  std::vector<double> values;
  double bin_width_s = 0.0;

  /// Distance step between consecutive bins, c * dt / 2.
  double step() const { return kSpeedOfLight * bin_width_s / 2.0; }
  /// Bin holding one-way distance r, floor(2r / (c dt)).
  long bin_of(double r) const;
};

DistanceGrid distance_grid(std::size_t nt, double bin_width_s);

}  // namespace nlos
