#include "nlos/io.hpp"

#include <yaml-cpp/yaml.h>

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "font5x7.hpp"
#include "nlos/error.hpp"

namespace nlos {
namespace {

static_assert(std::endian::native == std::endian::little, "NTV encoding assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t offset) {
  T value;
  std::memcpy(&value, in.data() + offset, sizeof(T));
  return value;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCategory::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCategory::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCategory::IoError, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string encode_ntv(const TransientVolume& tv) {
  std::string out;
  const std::size_t sample_bytes = tv.is_complex() ? 8 : 4;
  out.reserve(kNtvHeaderSize + tv.size() * sample_bytes);
  out.append("NTV1", 4);
  put<std::uint32_t>(out, kNtvVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tv.nx()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tv.ny()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tv.nt()));
  put<double>(out, tv.bin_width());
  put<double>(out, tv.aperture().extent());
  put<double>(out, tv.aperture().origin().x);
  put<double>(out, tv.aperture().origin().y);
  put<double>(out, tv.aperture().origin().z);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(tv.kind()));
  out.append(kNtvHeaderSize - out.size(), '\0');
  if (tv.is_complex()) {
    for (const auto& v : tv.phasor()) {
      put<float>(out, static_cast<float>(v.real()));
      put<float>(out, static_cast<float>(v.imag()));
    }
  } else {
    for (double v : tv.real()) put<float>(out, static_cast<float>(v));
  }
  return out;
}

TransientVolume decode_ntv(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "NTV1") != 0) {
    fail(ErrorCategory::BadMagic, "missing NTV1 magic");
  }
  if (bytes.size() < kNtvHeaderSize) {
    fail(ErrorCategory::TruncatedFile, "header needs " + std::to_string(kNtvHeaderSize) + " bytes, got " +
                                           std::to_string(bytes.size()));
  }
  const auto version = get<std::uint32_t>(bytes, 4);
  if (version != kNtvVersion) fail(ErrorCategory::VersionUnsupported, "NTV version " + std::to_string(version));
  const auto nx = get<std::uint32_t>(bytes, 8);
  const auto ny = get<std::uint32_t>(bytes, 12);
  const auto nt = get<std::uint32_t>(bytes, 16);
  const auto bin_width = get<double>(bytes, 20);
  const auto extent = get<double>(bytes, 28);
  const Vec3 origin{get<double>(bytes, 36), get<double>(bytes, 44), get<double>(bytes, 52)};
  const auto kind_byte = get<std::uint8_t>(bytes, 60);
  if (kind_byte > 2) fail(ErrorCategory::InvalidArgument, "unknown volume kind " + std::to_string(kind_byte));
  const auto kind = static_cast<VolumeKind>(kind_byte);

  TransientVolume tv(ApertureGrid(nx, ny, extent, origin), nt, bin_width, kind);
  const std::size_t sample_bytes = tv.is_complex() ? 8 : 4;
  const std::size_t expected = kNtvHeaderSize + tv.size() * sample_bytes;
  if (bytes.size() != expected) {
    fail(ErrorCategory::TruncatedFile, "expected " + std::to_string(expected) + " bytes, got " +
                                           std::to_string(bytes.size()));
  }
  std::size_t off = kNtvHeaderSize;
  if (tv.is_complex()) {
    for (auto& v : tv.phasor()) {
      v = {get<float>(bytes, off), get<float>(bytes, off + 4)};
      off += 8;
    }
  } else {
    for (auto& v : tv.real()) {
      v = get<float>(bytes, off);
      off += 4;
    }
  }
  return tv;
}

void write_ntv(const std::filesystem::path& path, const TransientVolume& tv) { write_file_atomic(path, encode_ntv(tv)); }

TransientVolume read_ntv(const std::filesystem::path& path) { return decode_ntv(read_file(path)); }

std::uint16_t encode_pixel(double value, const std::optional<DepthRange>& depth) {
  double unit = value;
  if (depth) unit = (value - depth->z_min) / (depth->z_max - depth->z_min);
  if (!(unit > 0.0)) unit = 0.0;
  if (unit > 1.0) unit = 1.0;
  // nearbyint honours the default round-to-nearest-even mode.
  return static_cast<std::uint16_t>(std::nearbyint(unit * 65535.0));
}

std::string encode_pgm(const Image& img, const std::optional<DepthRange>& depth) {
  std::ostringstream header;
  header << "P5\n";
  if (depth) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "# nlos-depth-range %.17g %.17g\n", depth->z_min, depth->z_max);
    header << buf;
  }
  header << img.width << ' ' << img.height << "\n65535\n";
  std::string out = header.str();
  out.reserve(out.size() + 2 * img.size());
  for (double v : img.data) {
    const std::uint16_t p = encode_pixel(v, depth);
    out.push_back(static_cast<char>(p >> 8));
    out.push_back(static_cast<char>(p & 0xFF));
  }
  return out;
}

void write_image(const std::filesystem::path& path, const Image& img, const std::optional<DepthRange>& depth) {
  write_file_atomic(path, encode_pgm(img, depth));
}

LoadedImage read_image(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  LoadedImage out;
  auto bad = [&](const std::string& why) { fail(ErrorCategory::IoError, path.string() + ": " + why); };

  // Header tokens separated by whitespace; comment lines may carry the range.
  std::vector<std::string> tokens;
  while (tokens.size() < 4 && pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      const std::size_t end = bytes.find('\n', pos);
      const std::string line = bytes.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      DepthRange r;
      if (std::sscanf(line.c_str(), "# nlos-depth-range %lf %lf", &r.z_min, &r.z_max) == 2) out.depth = r;
      pos = end == std::string::npos ? bytes.size() : end + 1;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      std::size_t end = pos;
      while (end < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[end]))) ++end;
      tokens.push_back(bytes.substr(pos, end - pos));
      pos = end;
    }
  }
  if (tokens.size() < 4 || tokens[0] != "P5") bad("not a binary PGM");
  if (tokens[3] != "65535") bad("expected maxval 65535");
  ++pos;  // single whitespace after maxval
  const std::size_t w = std::stoul(tokens[1]);
  const std::size_t h = std::stoul(tokens[2]);
  if (bytes.size() - pos != 2 * w * h) {
    fail(ErrorCategory::TruncatedFile, path.string() + ": expected " + std::to_string(2 * w * h) +
                                           " payload bytes, got " + std::to_string(bytes.size() - pos));
  }
  out.image = Image(w, h);
  for (std::size_t i = 0; i < w * h; ++i) {
    const auto hi = static_cast<unsigned char>(bytes[pos + 2 * i]);
    const auto lo = static_cast<unsigned char>(bytes[pos + 2 * i + 1]);
    const double unit = static_cast<double>((hi << 8) | lo) / 65535.0;
    out.image.data[i] = out.depth ? out.depth->z_min + unit * (out.depth->z_max - out.depth->z_min) : unit;
  }
  return out;
}

std::vector<ScenePoint> plane_letter_points(const std::string& text, double z, double albedo, double exponent,
                                            double pitch) {
  std::vector<ScenePoint> points;
  const double columns = 6.0 * static_cast<double>(text.size()) - 1.0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
    const detail::Glyph* glyph = detail::find_glyph(c);
    if (!glyph) fail(ErrorCategory::SceneParse, std::string("no glyph for character '") + text[i] + "'");
    for (std::size_t row = 0; row < 7; ++row) {
      for (std::size_t col = 0; col < 5; ++col) {
        if (glyph->rows[row][col] != '#') continue;
        const double gx = 6.0 * static_cast<double>(i) + static_cast<double>(col) - (columns - 1.0) / 2.0;
        const double gy = 3.0 - static_cast<double>(row);
        points.push_back({{gx * pitch, gy * pitch, z}, albedo, exponent});
      }
    }
  }
  return points;
}

namespace {

[[noreturn]] void scene_error(const std::string& source, const YAML::Node& node, const std::string& what) {
  fail(ErrorCategory::SceneParse, source + ":" + std::to_string(node.Mark().line + 1) + ": " + what);
}

void check_keys(const std::string& source, const YAML::Node& map, const std::set<std::string>& allowed) {
  if (!map.IsMap()) scene_error(source, map, "expected a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) scene_error(source, kv.first, "unknown key '" + key + "'");
  }
}

template <typename T>
T scalar(const std::string& source, const YAML::Node& parent, const std::string& key) {
  const YAML::Node node = parent[key];
  if (!node) scene_error(source, parent, "missing key '" + key + "'");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    scene_error(source, node, "bad value for '" + key + "'");
  }
}

template <typename T>
T scalar_or(const std::string& source, const YAML::Node& parent, const std::string& key, T fallback) {
  if (!parent[key]) return fallback;
  return scalar<T>(source, parent, key);
}

}  // namespace

Scene parse_scene(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    fail(ErrorCategory::SceneParse, source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root || !root.IsMap()) fail(ErrorCategory::SceneParse, source + ": scene must be a mapping");
  check_keys(source, root, {"name", "points", "generators"});

  Scene scene;
  scene.name = scalar_or<std::string>(source, root, "name", "unnamed");
  if (const YAML::Node points = root["points"]) {
    if (!points.IsSequence()) scene_error(source, points, "'points' must be a list");
    for (const auto& p : points) {
      check_keys(source, p, {"position", "albedo", "falloff_exponent"});
      const YAML::Node pos = p["position"];
      if (!pos || !pos.IsSequence() || pos.size() != 3) scene_error(source, p, "position must be [x, y, z]");
      ScenePoint sp;
      try {
        sp.position = {pos[0].as<double>(), pos[1].as<double>(), pos[2].as<double>()};
      } catch (const YAML::Exception&) {
        scene_error(source, pos, "position entries must be numbers");
      }
      sp.albedo = scalar_or<double>(source, p, "albedo", 1.0);
      sp.falloff_exponent = scalar_or<double>(source, p, "falloff_exponent", 4.0);
      scene.points.push_back(sp);
    }
  }
  if (const YAML::Node gens = root["generators"]) {
    if (!gens.IsSequence()) scene_error(source, gens, "'generators' must be a list");
    for (const auto& g : gens) {
      check_keys(source, g, {"plane_letter"});
      const YAML::Node pl = g["plane_letter"];
      check_keys(source, pl, {"text", "z", "albedo", "exponent", "pitch"});
      const auto letters = plane_letter_points(scalar<std::string>(source, pl, "text"), scalar<double>(source, pl, "z"),
                                               scalar_or<double>(source, pl, "albedo", 1.0),
                                               scalar_or<double>(source, pl, "exponent", 4.0),
                                               scalar<double>(source, pl, "pitch"));
      scene.points.insert(scene.points.end(), letters.begin(), letters.end());
    }
  }
  try {
    scene.validate();
  } catch (const Error& e) {
    fail(ErrorCategory::SceneParse, source + ": " + e.what());
  }
  return scene;
}

Scene load_scene(const std::filesystem::path& path) { return parse_scene(read_file(path), path.string()); }

void save_params(const std::filesystem::path& path, const ParamsFile& params) {
  nlohmann::json j;
  j["format"] = "nlos-params";
  j["version"] = 1;
  j["nx"] = params.lpc.nx;
  j["ny"] = params.lpc.ny;
  j["bin_width_s"] = params.bin_width_s;
  j["logits"] = params.lpc.logits;
  std::vector<double> s;
  for (const auto& a : params.apf) s.push_back(a.s);
  j["apf_s"] = s;
  j["provenance"] = nlohmann::json::parse(params.provenance_json);
  write_file_atomic(path, j.dump(1) + "\n");
}

ParamsFile load_params(const std::filesystem::path& path) {
  ParamsFile out;
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    if (j.at("format") != "nlos-params") fail(ErrorCategory::BadMagic, path.string() + " is not a parameter file");
    if (j.at("version") != 1) fail(ErrorCategory::VersionUnsupported, "parameter file version");
    out.lpc.nx = j.at("nx").get<std::size_t>();
    out.lpc.ny = j.at("ny").get<std::size_t>();
    out.lpc.logits = j.at("logits").get<std::vector<double>>();
    out.bin_width_s = j.at("bin_width_s").get<double>();
    for (double s : j.at("apf_s").get<std::vector<double>>()) out.apf.push_back({s});
    out.provenance_json = j.value("provenance", nlohmann::json::object()).dump();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::IoError, path.string() + ": " + e.what());
  }
  if (out.lpc.logits.size() != 3 * out.lpc.nx * out.lpc.ny) {
    fail(ErrorCategory::ShapeMismatch, path.string() + ": logits size does not match nx, ny");
  }
  return out;
}

}  // namespace nlos
