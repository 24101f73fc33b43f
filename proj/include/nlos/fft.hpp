#pragma once

#include <fftw3.h>

#include <cstddef>
#include <span>

#include "nlos/geometry.hpp"

namespace nlos {

/// Thin RAII wrapper over an FFTW plan pair working on an internal aligned
/// buffer. forward() is the unnormalized DFT sum_n x[n] e^{-j 2 pi m n / N};
/// inverse() includes the 1/N factor. Instances are not shared across threads;
/// plan creation is serialized internally.
class Fft1d {
 public:
  explicit Fft1d(std::size_t n);
  ~Fft1d();
  Fft1d(const Fft1d&) = delete;
  Fft1d& operator=(const Fft1d&) = delete;

  std::size_t size() const { return n_; }
  void forward(std::span<cplx> data);
  void inverse(std::span<cplx> data);

 private:
  std::size_t n_;
  fftw_complex* buf_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

/// Row-major 2-D transform of shape (rows, cols).
class Fft2d {
 public:
  Fft2d(std::size_t rows, std::size_t cols);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  void forward(std::span<cplx> data);
  void inverse(std::span<cplx> data);

 private:
  std::size_t rows_;
  std::size_t cols_;
  fftw_complex* buf_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

}  // namespace nlos
