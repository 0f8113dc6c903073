#pragma once

#include <complex>
#include <span>

#include <fftw3.h>

namespace cantus::signal::detail {

/// Real-to-complex FFT of fixed size with owned aligned buffers. Not shareable
/// across threads; create one per call site.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  /// Input of length <= n is zero-padded. Returns n/2+1 complex bins.
  std::span<const std::complex<double>> forward(std::span<const double> input);
  /// Unnormalized inverse of n/2+1 bins (result scaled by n).
  std::span<const double> inverse(std::span<const std::complex<double>> spectrum);

 private:
  int n_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

}  // namespace cantus::signal::detail
