#include "nlos/fft.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <string>

#include "nlos/error.hpp"

namespace nlos {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void copy_in(fftw_complex* buf, std::span<const cplx> data) {
  std::memcpy(buf, data.data(), data.size() * sizeof(cplx));
}

void copy_out(std::span<cplx> data, const fftw_complex* buf, double scale) {
  const auto* src = reinterpret_cast<const cplx*>(buf);
  if (scale == 1.0) {
    std::copy(src, src + data.size(), data.begin());
  } else {
    std::transform(src, src + data.size(), data.begin(), [scale](cplx v) { return v * scale; });
  }
}

void check_size(std::size_t expected, std::size_t got) {
  if (expected != got) {
    fail(ErrorCategory::ShapeMismatch,
         "fft length " + std::to_string(got) + " does not match plan length " + std::to_string(expected));
  }
}

}  // namespace

Fft1d::Fft1d(std::size_t n) : n_(n) {
  std::lock_guard lock(planner_mutex());
  buf_ = fftw_alloc_complex(n);
  fwd_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft1d::~Fft1d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(fwd_);
  fftw_destroy_plan(inv_);
  fftw_free(buf_);
}

void Fft1d::forward(std::span<cplx> data) {
  check_size(n_, data.size());
  copy_in(buf_, data);
  fftw_execute(fwd_);
  copy_out(data, buf_, 1.0);
}

void Fft1d::inverse(std::span<cplx> data) {
  check_size(n_, data.size());
  copy_in(buf_, data);
  fftw_execute(inv_);
  copy_out(data, buf_, 1.0 / static_cast<double>(n_));
}

Fft2d::Fft2d(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  std::lock_guard lock(planner_mutex());
  buf_ = fftw_alloc_complex(rows * cols);
  fwd_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf_, buf_, FFTW_FORWARD,
                          FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf_, buf_, FFTW_BACKWARD,
                          FFTW_ESTIMATE);
}

Fft2d::~Fft2d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(fwd_);
  fftw_destroy_plan(inv_);
  fftw_free(buf_);
}

void Fft2d::forward(std::span<cplx> data) {
  check_size(rows_ * cols_, data.size());
  copy_in(buf_, data);
  fftw_execute(fwd_);
  copy_out(data, buf_, 1.0);
}

void Fft2d::inverse(std::span<cplx> data) {
  check_size(rows_ * cols_, data.size());
  copy_in(buf_, data);
  fftw_execute(inv_);
  copy_out(data, buf_, 1.0 / static_cast<double>(rows_ * cols_));
}

}  // namespace nlos
