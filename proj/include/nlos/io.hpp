#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nlos/apf.hpp"
#include "nlos/forward.hpp"
#include "nlos/geometry.hpp"
#include "nlos/image.hpp"
#include "nlos/lpc.hpp"

namespace nlos {

// --- NTV transient files ----------------------------------------------------
//
// 64-byte little-endian header followed by f32 samples in (iy, ix, it) order,
// complex volumes as interleaved (re, im) pairs.
//
//   offset  size  field
//        0     4  magic "NTV1"
//        4     4  u32 version (1)
//        8    12  u32 nx, ny, nt
//       20     8  f64 bin_width_s
//       28     8  f64 extent_m
//       36    24  f64 origin[3]
//       60     1  u8 kind (0 clean, 1 counts, 2 complex)
//       61     3  zero padding

inline constexpr std::uint32_t kNtvVersion = 1;
inline constexpr std::size_t kNtvHeaderSize = 64;

std::string encode_ntv(const TransientVolume& tv);
TransientVolume decode_ntv(const std::string& bytes);
void write_ntv(const std::filesystem::path& path, const TransientVolume& tv);
TransientVolume read_ntv(const std::filesystem::path& path);

// --- 16-bit PGM images --------------------------------------------------------

struct DepthRange {
  double z_min = 0.0;
  double z_max = 1.0;
};

/// Linear map of [0, 1] (intensity) or [z_min, z_max] (depth) to 0..65535,
/// rounding half to even, clamping outside the range.
std::uint16_t encode_pixel(double value, const std::optional<DepthRange>& depth);

/// Binary P5 graymap, maxval 65535. Depth images carry their range in a
/// comment line so read_image can invert the mapping.
std::string encode_pgm(const Image& img, const std::optional<DepthRange>& depth);
void write_image(const std::filesystem::path& path, const Image& img, const std::optional<DepthRange>& depth);

struct LoadedImage {
  Image image;
  std::optional<DepthRange> depth;
};
LoadedImage read_image(const std::filesystem::path& path);

// --- Scene description files ------------------------------------------------

/// YAML scene document:
///   name: <label>
///   points: [{position: [x, y, z], albedo: a, falloff_exponent: z}, ...]
///   generators: [{plane_letter: {text, z, albedo, exponent, pitch}}, ...]
/// Unknown keys are rejected with their line number.
Scene parse_scene(const std::string& text, const std::string& source = "<scene>");
Scene load_scene(const std::filesystem::path& path);

/// 5x7 bitmap text placed on the plane at depth z, centered on the wall axis.
std::vector<ScenePoint> plane_letter_points(const std::string& text, double z, double albedo, double exponent,
                                            double pitch);

// --- Learned parameter files -----------------------------------------------

struct ParamsFile {
  LpcParams lpc;
  std::vector<ApfParams> apf;
  double bin_width_s = 0.0;
  /// Free-form provenance echoed into the file.
  std::string provenance_json = "{}";
};

void save_params(const std::filesystem::path& path, const ParamsFile& params);
ParamsFile load_params(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace nlos
