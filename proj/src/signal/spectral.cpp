#include "cantus/signal/spectral.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "cantus/error.hpp"
#include "fft.hpp"
#include "window.hpp"

namespace cantus::signal {

namespace detail {

std::vector<double> padded_hann(const StftConfig& cfg) {
  std::vector<double> w(static_cast<std::size_t>(cfg.fft_size), 0.0);
  const int offset = (cfg.fft_size - cfg.win_size) / 2;
  for (int n = 0; n < cfg.win_size; ++n) {
    w[static_cast<std::size_t>(offset + n)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / cfg.win_size);
  }
  return w;
}

namespace {
std::size_t reflect_index(long long i, std::size_t n) {
  if (n == 1) return 0;
  const long long period = 2 * static_cast<long long>(n - 1);
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<long long>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}
}  // namespace

void windowed_frame(const std::vector<double>& samples, const StftConfig& cfg,
                    const std::vector<double>& window, std::size_t frame, double* out) {
  const long long start =
      static_cast<long long>(frame) * cfg.hop_size - static_cast<long long>(cfg.fft_size / 2);
  const std::size_t n = samples.size();
  for (int k = 0; k < cfg.fft_size; ++k) {
    const double w = window[static_cast<std::size_t>(k)];
    out[k] = w == 0.0 ? 0.0 : w * samples[reflect_index(start + k, n)];
  }
}

}  // namespace detail

Spectrogram stft(const AudioBuffer& audio, const StftConfig& cfg) {
  cfg.validate();
  audio.validate();
  if (audio.samples.empty()) throw ValidationError("stft: empty audio");

  const std::size_t frames = cfg.num_frames(audio.size());
  const auto window = detail::padded_hann(cfg);
  detail::RealFft fft(cfg.fft_size);
  std::vector<double> buf(static_cast<std::size_t>(cfg.fft_size));

  Spectrogram out;
  out.kind = SpectrogramKind::linear;
  out.config = cfg;
  out.sample_rate = audio.sample_rate;
  out.data.resize(static_cast<Eigen::Index>(frames), cfg.bins());
  for (std::size_t f = 0; f < frames; ++f) {
    detail::windowed_frame(audio.samples, cfg, window, f, buf.data());
    const auto spec = fft.forward(buf);
    for (int k = 0; k < cfg.bins(); ++k) {
      out.data(static_cast<Eigen::Index>(f), k) = std::abs(spec[static_cast<std::size_t>(k)]);
    }
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix mel_filterbank(int mel_bins, int fft_size, int sample_rate, double fmin, double fmax) {
  if (mel_bins < 1) throw ValidationError("mel_bins must be >= 1");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw ValidationError("mel range must satisfy 0 <= fmin < fmax <= sample_rate/2");
  }
  const int bins = fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> edges(static_cast<std::size_t>(mel_bins + 2));
  for (int i = 0; i < mel_bins + 2; ++i) {
    edges[static_cast<std::size_t>(i)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (mel_bins + 1));
  }
  Matrix fb = Matrix::Zero(mel_bins, bins);
  for (int m = 0; m < mel_bins; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      fb(m, k) = w;
    }
  }
  return fb;
}

Spectrogram mel_project(const Spectrogram& spec, int mel_bins, double fmin, double fmax) {
  if (spec.kind != SpectrogramKind::linear) throw ValidationError("mel_project needs a linear spectrogram");
  const Matrix fb = mel_filterbank(mel_bins, spec.config.fft_size, spec.sample_rate, fmin, fmax);
  if (spec.data.cols() != fb.cols()) throw ValidationError("mel_project: bin count mismatch");
  Spectrogram out;
  out.kind = SpectrogramKind::mel;
  out.config = spec.config;
  out.sample_rate = spec.sample_rate;
  out.fmin = fmin;
  out.fmax = fmax;
  out.data = spec.data * fb.transpose();
  return out;
}

Spectrogram mel_to_linear(const Spectrogram& mel) {
  if (mel.kind != SpectrogramKind::mel) throw ValidationError("mel_to_linear needs a mel spectrogram");
  const Matrix fb = mel_filterbank(static_cast<int>(mel.bins()), mel.config.fft_size,
                                   mel.sample_rate, mel.fmin, mel.fmax);
  const Vector width = fb.rowwise().sum();
  Matrix density = mel.data;
  for (Eigen::Index m = 0; m < density.cols(); ++m) {
    density.col(m) /= width(m) > 0.0 ? width(m) : 1.0;
  }
  const RowVector coverage = fb.colwise().sum();
  Spectrogram out;
  out.kind = SpectrogramKind::linear;
  out.config = mel.config;
  out.sample_rate = mel.sample_rate;
  out.data = density * fb;
  for (Eigen::Index k = 0; k < out.data.cols(); ++k) {
    if (coverage(k) > 0.0) {
      out.data.col(k) /= coverage(k);
    } else {
      out.data.col(k).setZero();
    }
  }
  return out;
}

}  // namespace cantus::signal
