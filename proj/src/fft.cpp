#include "wnlab/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <new>
#include <stdexcept>

namespace wnlab {

namespace {
// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft2D::RealFft2D(int resolution) : r_(resolution) {
  if (resolution < 2) throw std::invalid_argument("RealFft2D: resolution must be >= 2");
  const std::size_t n_real = static_cast<std::size_t>(r_) * r_;
  const std::size_t n_spec = static_cast<std::size_t>(r_) * (r_ / 2 + 1);
  real_ = fftw_alloc_real(n_real);
  spec_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(n_spec));
  if (real_ == nullptr || spec_ == nullptr) {
    fftw_free(real_);
    fftw_free(spec_);
    throw std::bad_alloc();
  }
  std::lock_guard lock(planner_mutex());
  plan_forward_ = fftw_plan_dft_r2c_2d(r_, r_, real_, reinterpret_cast<fftw_complex*>(spec_), FFTW_ESTIMATE);
  plan_inverse_ = fftw_plan_dft_c2r_2d(r_, r_, reinterpret_cast<fftw_complex*>(spec_), real_, FFTW_ESTIMATE);
}

RealFft2D::~RealFft2D() {
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_inverse_));
  }
  fftw_free(real_);
  fftw_free(spec_);
}

void RealFft2D::forward() { fftw_execute(static_cast<fftw_plan>(plan_forward_)); }

void RealFft2D::inverse() { fftw_execute(static_cast<fftw_plan>(plan_inverse_)); }

}  // namespace wnlab
