#include "fft.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>

#include "cantus/error.hpp"

namespace cantus::signal::detail {

namespace {
// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 2) throw ValidationError("FFT size must be >= 2");
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(static_cast<std::size_t>(n));
  spec_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
  fwd_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(fwd_);
  fftw_destroy_plan(inv_);
  fftw_free(real_);
  fftw_free(spec_);
}

std::span<const std::complex<double>> RealFft::forward(std::span<const double> input) {
  const std::size_t n = std::min<std::size_t>(input.size(), static_cast<std::size_t>(n_));
  std::copy_n(input.begin(), n, real_);
  std::fill(real_ + n, real_ + n_, 0.0);
  fftw_execute(fwd_);
  return {reinterpret_cast<const std::complex<double>*>(spec_), static_cast<std::size_t>(bins())};
}

std::span<const double> RealFft::inverse(std::span<const std::complex<double>> spectrum) {
  if (spectrum.size() != static_cast<std::size_t>(bins())) {
    throw ValidationError("inverse FFT: wrong number of bins");
  }
  std::memcpy(spec_, spectrum.data(), spectrum.size() * sizeof(fftw_complex));
  // c2r destroys its input; spec_ is scratch here.
  fftw_execute(inv_);
  return {real_, static_cast<std::size_t>(n_)};
}

}  // namespace cantus::signal::detail
