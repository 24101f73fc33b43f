#include "nlos/geometry.hpp"

#include <string>

#include "nlos/error.hpp"

namespace nlos {

ApertureGrid::ApertureGrid(std::size_t nx, std::size_t ny, double extent_m, Vec3 origin_m)
    : nx_(nx), ny_(ny), extent_(extent_m), origin_(origin_m) {
  if (nx < 2 || ny < 2) {
    fail(ErrorCategory::InvalidArgument,
         "aperture needs at least 2x2 scan points, got " + std::to_string(nx) + "x" + std::to_string(ny));
  }
  if (!(extent_m > 0.0) || !std::isfinite(extent_m)) {
    fail(ErrorCategory::InvalidArgument, "aperture extent must be positive and finite");
  }
  if (origin_m.z != 0.0) {
    fail(ErrorCategory::InvalidArgument, "scan points must lie on the z = 0 wall plane");
  }
}

ApertureGrid ApertureGrid::centered(std::size_t nx, std::size_t ny, double extent_m) {
  return ApertureGrid(nx, ny, extent_m, {-extent_m / 2.0, -extent_m / 2.0, 0.0});
}

std::vector<Vec3> scan_positions(const ApertureGrid& grid) {
  std::vector<Vec3> out;
  out.reserve(grid.size());
  for (std::size_t iy = 0; iy < grid.ny(); ++iy) {
    for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
      out.push_back(grid.position(ix, iy));
    }
  }
  return out;
}

TransientVolume::TransientVolume(ApertureGrid aperture, std::size_t nt, double bin_width_s, VolumeKind kind)
    : aperture_(aperture), nt_(nt), bin_width_(bin_width_s), kind_(kind) {
  if (nt < 8) {
    fail(ErrorCategory::InvalidArgument, "transient volumes need at least 8 time bins, got " + std::to_string(nt));
  }
  if (!(bin_width_s > 0.0) || !std::isfinite(bin_width_s)) {
    fail(ErrorCategory::InvalidArgument, "bin width must be positive and finite");
  }
  if (kind == VolumeKind::complex_phasor) {
    phasor_.assign(aperture_.size() * nt_, cplx{});
  } else {
    real_.assign(aperture_.size() * nt_, 0.0);
  }
}

bool TransientVolume::same_shape(const TransientVolume& other) const {
  return aperture_ == other.aperture_ && nt_ == other.nt_ && bin_width_ == other.bin_width_;
}

void TransientVolume::set_kind(VolumeKind kind) {
  if ((kind == VolumeKind::complex_phasor) != is_complex()) {
    fail(ErrorCategory::InvalidArgument, "cannot relabel between real and complex volumes");
  }
  kind_ = kind;
}

void ReconGeometry::validate() const {
  if (nvx < 2 || nvy < 2 || nvz < 2) {
    fail(ErrorCategory::InvalidArgument, "reconstruction grid needs at least 2 voxels per axis");
  }
  if (!(z_min >= 0.0) || !(z_max > z_min) || !std::isfinite(z_max)) {
    fail(ErrorCategory::InvalidArgument, "depth range must satisfy 0 <= z_min < z_max");
  }
}

ReconGeometry recon_geometry_for(const ApertureGrid& grid, std::size_t nvz, double z_min, double z_max) {
  ReconGeometry g{grid.nx(), grid.ny(), nvz, z_min, z_max};
  g.validate();
  return g;
}

std::vector<Vec3> voxel_centers(const ReconGeometry& geom, const ApertureGrid& grid) {
  geom.validate();
  const Vec3 o = grid.origin();
  const double sx = grid.extent() / static_cast<double>(geom.nvx - 1);
  const double sy = grid.extent() / static_cast<double>(geom.nvy - 1);
  std::vector<Vec3> out(geom.size());
  for (std::size_t iy = 0; iy < geom.nvy; ++iy) {
    for (std::size_t ix = 0; ix < geom.nvx; ++ix) {
      for (std::size_t iz = 0; iz < geom.nvz; ++iz) {
        out[geom.index(ix, iy, iz)] = {o.x + static_cast<double>(ix) * sx,
                                       o.y + static_cast<double>(iy) * sy, geom.z_center(iz)};
      }
    }
  }
  return out;
}

long DistanceGrid::bin_of(double r) const {
  return static_cast<long>(std::floor(2.0 * r / (kSpeedOfLight * bin_width_s)));
}

DistanceGrid distance_grid(std::size_t nt, double bin_width_s) {
  if (nt < 1 || !(bin_width_s > 0.0)) {
    fail(ErrorCategory::InvalidArgument, "distance grid needs nt >= 1 and a positive bin width");
  }
  DistanceGrid dg;
  dg.bin_width_s = bin_width_s;
  dg.values.resize(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    dg.values[k] = kSpeedOfLight * (static_cast<double>(k) + 0.5) * bin_width_s / 2.0;
  }
  return dg;
}

}  // namespace nlos
