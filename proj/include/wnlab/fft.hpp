#pragma once

#include <complex>
#include <span>

namespace wnlab {

/// Square real-to-complex 2D transform backed by FFTW. One object owns its
/// plans and buffers and is not shared between threads; plan creation itself
/// is serialized internally.
///
/// Layout: real data is row-major R x R (first index along x1); the spectrum
/// is R x (R/2 + 1). No normalization is applied in either direction.
class RealFft2D {
 public:
  explicit RealFft2D(int resolution);
  ~RealFft2D();
  RealFft2D(const RealFft2D&) = delete;
  RealFft2D& operator=(const RealFft2D&) = delete;

  int resolution() const { return r_; }
  int spectral_cols() const { return r_ / 2 + 1; }

  std::span<double> real() { return {real_, static_cast<std::size_t>(r_) * r_}; }
  std::span<std::complex<double>> spectrum() {
    return {spec_, static_cast<std::size_t>(r_) * static_cast<std::size_t>(spectral_cols())};
  }

  /// real() -> spectrum()
  void forward();
  /// spectrum() -> real(); destroys spectrum() contents.
  void inverse();

 private:
  int r_;
  double* real_ = nullptr;
  std::complex<double>* spec_ = nullptr;
  void* plan_forward_ = nullptr;
  void* plan_inverse_ = nullptr;
};

}  // namespace wnlab
