#pragma once

#include <cstddef>
#include <vector>

#include "cantus/types.hpp"

namespace cantus::signal {

inline constexpr int kDefaultSampleRate = 24000;

/// Mono waveform in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  void validate() const;
};

/// Hann-windowed STFT framing. 1025 bins at fft_size 2048.
struct StftConfig {
  int fft_size = 2048;
  int win_size = 2048;
  int hop_size = 256;

  int bins() const { return fft_size / 2 + 1; }
  void validate() const;
  /// Frame count produced for `num_samples` with center padding.
  std::size_t num_frames(std::size_t num_samples) const;
};

enum class SpectrogramKind { linear, mel };

struct Spectrogram {
  Matrix data;  // frames x bins, magnitudes
  SpectrogramKind kind = SpectrogramKind::linear;
  StftConfig config;
  int sample_rate = kDefaultSampleRate;
  // Mel range; meaningful only for kind == mel.
  double fmin = 0.0;
  double fmax = 0.0;

  Eigen::Index frames() const { return data.rows(); }
  Eigen::Index bins() const { return data.cols(); }
  void validate() const;
};

/// Per-frame F0 in Hz (0 = unvoiced) with autocorrelation periodicity.
struct PitchTrack {
  std::vector<double> f0;
  std::vector<double> periodicity;
  std::vector<bool> voiced;

  std::size_t size() const { return f0.size(); }
  void validate() const;
};

}  // namespace cantus::signal
