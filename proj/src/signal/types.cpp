#include "cantus/signal/types.hpp"

#include <cmath>
#include <string>

#include "cantus/error.hpp"

namespace cantus::signal {

void AudioBuffer::validate() const {
  if (sample_rate <= 0) throw ValidationError("sample_rate must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      throw ValidationError("non-finite audio sample at index " + std::to_string(i));
    }
  }
}

void StftConfig::validate() const {
  if (fft_size < 2 || win_size < 1 || hop_size < 1) {
    throw ValidationError("STFT sizes must be positive (fft_size >= 2)");
  }
  if (win_size > fft_size) throw ValidationError("win_size must not exceed fft_size");
  if (hop_size > win_size) throw ValidationError("hop_size must not exceed win_size");
}

std::size_t StftConfig::num_frames(std::size_t num_samples) const {
  const std::size_t pad = static_cast<std::size_t>(fft_size / 2) * 2;
  return (num_samples + pad - static_cast<std::size_t>(fft_size)) / hop_size + 1;
}

void Spectrogram::validate() const {
  config.validate();
  if (sample_rate <= 0) throw ValidationError("spectrogram sample_rate must be positive");
  if (kind == SpectrogramKind::linear && data.cols() != config.bins()) {
    throw ValidationError("linear spectrogram must have fft_size/2+1 bins");
  }
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double v = data.data()[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("spectrogram entries must be finite and non-negative");
    }
  }
}

void PitchTrack::validate() const {
  if (periodicity.size() != f0.size() || voiced.size() != f0.size()) {
    throw ValidationError("pitch track fields must have equal lengths");
  }
  for (std::size_t i = 0; i < f0.size(); ++i) {
    if (!std::isfinite(f0[i]) || f0[i] < 0.0) throw ValidationError("f0 must be finite and >= 0");
    if ((f0[i] > 0.0) != voiced[i]) {
      throw ValidationError("f0 > 0 must coincide with voiced at frame " + std::to_string(i));
    }
  }
}

}  // namespace cantus::signal
