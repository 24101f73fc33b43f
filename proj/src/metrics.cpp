#include "nlos/metrics.hpp"

#include <cmath>
#include <string>

#include "nlos/error.hpp"

namespace nlos {
namespace {

void check_same(const Image& a, const Image& b) {
  if (!a.same_shape(b)) {
    fail(ErrorCategory::ShapeMismatch, "image sizes differ: " + std::to_string(a.width) + "x" +
                                           std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                           std::to_string(b.height));
  }
}

}  // namespace

Image center_crop(const Image& img, double fraction) {
  if (img.width < 2 || img.height < 2) fail(ErrorCategory::DegenerateCrop, "image must be at least 2x2");
  if (!(fraction > 0.0 && fraction <= 1.0)) fail(ErrorCategory::DegenerateCrop, "crop fraction must lie in (0, 1]");
  const auto w = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(img.width)));
  const auto h = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(img.height)));
  if (w < 1 || h < 1) fail(ErrorCategory::DegenerateCrop, "crop leaves no pixels");
  const std::size_t x0 = (img.width - w) / 2;
  const std::size_t y0 = (img.height - h) / 2;
  Image out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) out.at(x, y) = img.at(x0 + x, y0 + y);
  }
  return out;
}

double psnr(const Image& ref, const Image& test, double peak) {
  check_same(ref, test);
  double mse = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref.data[i] - test.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& ref, const Image& test, const SsimConfig& cfg) {
  check_same(ref, test);
  const auto win = static_cast<std::size_t>(cfg.window);
  if (ref.width < win || ref.height < win) {
    fail(ErrorCategory::TooSmall, "SSIM needs images of at least " + std::to_string(win) + " pixels per side");
  }
  std::vector<double> kernel(win * win);
  double ksum = 0.0;
  const double c = static_cast<double>(win - 1) / 2.0;
  for (std::size_t y = 0; y < win; ++y) {
    for (std::size_t x = 0; x < win; ++x) {
      const double dx = static_cast<double>(x) - c;
      const double dy = static_cast<double>(y) - c;
      kernel[y * win + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * cfg.gaussian_sigma * cfg.gaussian_sigma));
      ksum += kernel[y * win + x];
    }
  }
  for (auto& k : kernel) k /= ksum;

  const double c1 = (cfg.k1 * cfg.peak) * (cfg.k1 * cfg.peak);
  const double c2 = (cfg.k2 * cfg.peak) * (cfg.k2 * cfg.peak);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t y0 = 0; y0 + win <= ref.height; ++y0) {
    for (std::size_t x0 = 0; x0 + win <= ref.width; ++x0) {
      double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (std::size_t y = 0; y < win; ++y) {
        for (std::size_t x = 0; x < win; ++x) {
          const double k = kernel[y * win + x];
          const double a = ref.at(x0 + x, y0 + y);
          const double b = test.at(x0 + x, y0 + y);
          mx += k * a;
          my += k * b;
          sxx += k * a * a;
          syy += k * b * b;
          sxy += k * a * b;
        }
      }
      const double vx = sxx - mx * mx;
      const double vy = syy - my * my;
      const double cov = sxy - mx * my;
      total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

DepthErrors depth_errors(const Image& truth, const Image& estimate, const std::vector<char>& valid_mask) {
  check_same(truth, estimate);
  if (valid_mask.size() != truth.size()) fail(ErrorCategory::ShapeMismatch, "mask size differs from image size");
  double sq = 0.0;
  double ab = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!valid_mask[i]) continue;
    const double d = truth.data[i] - estimate.data[i];
    sq += d * d;
    ab += std::abs(d);
    ++n;
  }
  if (n == 0) fail(ErrorCategory::EmptyMask, "depth error mask selects no pixels");
  return {std::sqrt(sq / static_cast<double>(n)), ab / static_cast<double>(n)};
}

std::vector<char> foreground_mask(const Image& gt_intensity, double threshold) {
  std::vector<char> mask(gt_intensity.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = gt_intensity.data[i] >= threshold ? 1 : 0;
  return mask;
}

}  // namespace nlos
