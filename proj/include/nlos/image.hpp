#pragma once

#include <cstddef>
#include <vector>

namespace nlos {

/// Row-major single-channel image, y outer.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> data;

  Image() = default;
  Image(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), data(w * h, fill) {}

  std::size_t size() const { return data.size(); }
  double& at(std::size_t x, std::size_t y) { return data[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return data[y * width + x]; }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
};

}  // namespace nlos
