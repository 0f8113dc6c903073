#include "cantus/signal/pitch.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "cantus/error.hpp"
#include "cantus/signal/spectral.hpp"
#include "fft.hpp"
#include "window.hpp"

namespace cantus::signal {

namespace {

// A candidate within this fraction of the best peak wins if it has a shorter
// lag; keeps period multiples from beating the true period.
constexpr double kOctaveGuard = 0.9;

struct PeakPick {
  double f0 = 0.0;
  double periodicity = 0.0;
};

std::vector<double> autocorrelation_from_power(detail::RealFft& fft, std::vector<double> power) {
  std::vector<std::complex<double>> spec(power.size());
  for (std::size_t k = 0; k < power.size(); ++k) spec[k] = {power[k], 0.0};
  const auto r = fft.inverse(spec);
  return {r.begin(), r.end()};
}

class AutocorrPicker {
 public:
  AutocorrPicker(std::vector<double> window_acf, int sample_rate, const PitchConfig& pc,
                 int max_lag_limit)
      : rw_(std::move(window_acf)), sr_(sample_rate), pc_(pc) {
    if (pc.fmin < 50.0 || pc.fmax > 2100.0 || pc.fmax <= pc.fmin) {
      throw ValidationError("pitch range must satisfy 50 <= fmin < fmax <= 2100");
    }
    lag_min_ = std::max(2, static_cast<int>(std::floor(sr_ / pc.fmax)));
    lag_max_ = std::min(max_lag_limit, static_cast<int>(std::ceil(sr_ / pc.fmin)));
    if (lag_max_ <= lag_min_ + 1) throw ValidationError("pitch range does not fit the analysis window");
  }

  PeakPick pick(const std::vector<double>& r) const {
    PeakPick out;
    if (!(r[0] > 1e-12)) return out;
    auto norm = [&](int lag) {
      const auto l = static_cast<std::size_t>(lag);
      return (r[l] / r[0]) / (rw_[l] / rw_[0]);
    };
    std::vector<double> n(static_cast<std::size_t>(lag_max_ + 2));
    for (int lag = lag_min_ - 1; lag <= lag_max_ + 1; ++lag) n[static_cast<std::size_t>(lag)] = norm(lag);

    double best = -1.0;
    std::vector<int> peaks;
    for (int lag = lag_min_; lag <= lag_max_; ++lag) {
      const auto l = static_cast<std::size_t>(lag);
      if (n[l] >= n[l - 1] && n[l] > n[l + 1]) {
        peaks.push_back(lag);
        best = std::max(best, n[l]);
      }
    }
    if (peaks.empty() || best <= 0.0) return out;
    int chosen = peaks.front();
    for (int lag : peaks) {
      if (n[static_cast<std::size_t>(lag)] >= kOctaveGuard * best) {
        chosen = lag;
        break;
      }
    }
    const auto c = static_cast<std::size_t>(chosen);
    const double a = n[c - 1], b = n[c], d = n[c + 1];
    const double denom = a - 2.0 * b + d;
    double delta = 0.0;
    double peak = b;
    if (denom < 0.0) {
      delta = std::clamp(0.5 * (a - d) / denom, -0.5, 0.5);
      peak = b - 0.25 * (a - d) * delta;
    }
    out.periodicity = std::clamp(peak, 0.0, 1.0);
    if (out.periodicity > pc_.voicing_threshold) out.f0 = sr_ / (chosen + delta);
    return out;
  }

 private:
  std::vector<double> rw_;
  int sr_;
  PitchConfig pc_;
  int lag_min_ = 0;
  int lag_max_ = 0;
};

void push(PitchTrack& track, const PeakPick& p) {
  track.f0.push_back(p.f0);
  track.periodicity.push_back(p.periodicity);
  track.voiced.push_back(p.f0 > 0.0);
}

std::vector<double> power_of(std::span<const std::complex<double>> spec) {
  std::vector<double> p(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) p[k] = std::norm(spec[k]);
  return p;
}

}  // namespace

PitchTrack estimate_f0(const AudioBuffer& audio, const StftConfig& cfg, const PitchConfig& pc) {
  cfg.validate();
  audio.validate();
  PitchTrack track;
  if (audio.samples.empty()) return track;

  // Zero-padding to twice the frame makes the autocorrelation linear, not circular.
  detail::RealFft fft(2 * cfg.fft_size);
  const auto window = detail::padded_hann(cfg);
  const auto rw = autocorrelation_from_power(fft, power_of(fft.forward(window)));
  const AutocorrPicker picker(rw, audio.sample_rate, pc, cfg.win_size - 2);

  const std::size_t frames = cfg.num_frames(audio.size());
  std::vector<double> buf(static_cast<std::size_t>(cfg.fft_size));
  for (std::size_t f = 0; f < frames; ++f) {
    detail::windowed_frame(audio.samples, cfg, window, f, buf.data());
    push(track, picker.pick(autocorrelation_from_power(fft, power_of(fft.forward(buf)))));
  }
  return track;
}

PitchTrack estimate_f0_from_spectrogram(const Spectrogram& spec, const PitchConfig& pc) {
  if (spec.kind == SpectrogramKind::mel) return estimate_f0_from_spectrogram(mel_to_linear(spec), pc);
  spec.config.validate();
  if (spec.data.cols() != spec.config.bins()) throw ValidationError("spectrogram bin count does not match its config");

  detail::RealFft fft(spec.config.fft_size);
  const auto window = detail::padded_hann(spec.config);
  const auto rw = autocorrelation_from_power(fft, power_of(fft.forward(window)));
  const AutocorrPicker picker(rw, spec.sample_rate, pc,
                              std::min(spec.config.win_size, spec.config.fft_size / 2) - 2);

  PitchTrack track;
  std::vector<double> power(static_cast<std::size_t>(spec.config.bins()));
  for (Eigen::Index f = 0; f < spec.frames(); ++f) {
    for (Eigen::Index k = 0; k < spec.bins(); ++k) {
      const double m = spec.data(f, k);
      power[static_cast<std::size_t>(k)] = m * m;
    }
    push(track, picker.pick(autocorrelation_from_power(fft, power)));
  }
  return track;
}

int quantize_f0_value(double f0, int bins) {
  if (bins < 2) throw ValidationError("quantize_f0 needs at least 2 bins");
  if (!(f0 > 0.0)) return 0;
  const double pos = std::log(f0 / kF0QuantMin) / std::log(kF0QuantMax / kF0QuantMin);
  const double idx = 1.0 + std::floor(bins * pos);
  return static_cast<int>(std::clamp(idx, 1.0, static_cast<double>(bins)));
}

std::vector<int> quantize_f0(const PitchTrack& track, int bins) {
  std::vector<int> out(track.size());
  for (std::size_t i = 0; i < track.size(); ++i) {
    out[i] = track.voiced[i] ? quantize_f0_value(track.f0[i], bins) : 0;
  }
  return out;
}

double midi_to_hz(double midi) { return 440.0 * std::pow(2.0, (midi - 69.0) / 12.0); }
double hz_to_midi(double hz) { return 69.0 + 12.0 * std::log2(hz / 440.0); }

}  // namespace cantus::signal
