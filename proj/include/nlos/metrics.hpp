#pragma once

#include <limits>
#include <vector>

#include "nlos/image.hpp"

namespace nlos {

inline constexpr double kDefaultCropFraction = 0.75;
inline constexpr double kPsnrCap = 99.0;

/// Centered window of side round(fraction * n) per axis; an odd remainder
/// leaves the extra row/column on the high-index side.
Image center_crop(const Image& img, double fraction);

/// 10 log10(peak^2 / MSE); +infinity for identical images.
double psnr(const Image& ref, const Image& test, double peak = 1.0);
/// PSNR clamped to kPsnrCap for tabular output.
inline double psnr_capped(double db) { return db > kPsnrCap ? kPsnrCap : db; }

struct SsimConfig {
  int window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// Mean SSIM over all fully contained Gaussian windows.
double ssim(const Image& ref, const Image& test, const SsimConfig& cfg = {});

struct DepthErrors {
  double rmse = 0.0;
  double mad = 0.0;
};

DepthErrors depth_errors(const Image& truth, const Image& estimate, const std::vector<char>& valid_mask);

/// Pixels whose ground-truth intensity is at least 1e-3.
std::vector<char> foreground_mask(const Image& gt_intensity, double threshold = 1e-3);

}  // namespace nlos
