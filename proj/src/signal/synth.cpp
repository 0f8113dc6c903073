#include "cantus/signal/synth.hpp"

#include <cmath>
#include <numbers>

#include "cantus/error.hpp"

namespace cantus::signal {

double vibrato_ratio(const Vibrato& v, double t) {
  return std::pow(2.0, v.depth_cents / 1200.0 * std::sin(2.0 * std::numbers::pi * v.rate_hz * t));
}

AudioBuffer synth_tone(std::span<const Partial> partials, int sample_rate, double duration,
                       std::optional<Vibrato> vibrato) {
  if (sample_rate <= 0) throw ValidationError("sample_rate must be positive");
  if (!(duration >= 0.0)) throw ValidationError("duration must be non-negative");
  const double nyquist = sample_rate / 2.0;
  const double max_ratio = vibrato ? std::pow(2.0, std::abs(vibrato->depth_cents) / 1200.0) : 1.0;
  for (const auto& p : partials) {
    if (!(p.freq > 0.0) || p.freq * max_ratio >= nyquist) {
      throw ValidationError("partial frequency " + std::to_string(p.freq) +
                            " Hz is outside (0, sample_rate/2) and would alias");
    }
    if (!std::isfinite(p.amp)) throw ValidationError("partial amplitude must be finite");
  }

  const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
  AudioBuffer out;
  out.sample_rate = sample_rate;
  out.samples.assign(n, 0.0);

  // Warped time: integral of the vibrato frequency ratio. Every partial's
  // phase is 2*pi*freq*warped(t), so harmonics stay locked together.
  std::vector<double> warped(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    warped[i] = vibrato ? acc : t;
    if (vibrato) acc += vibrato_ratio(*vibrato, t) / sample_rate;
  }

  for (const auto& p : partials) {
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(p.start * sample_rate)));
    const auto last = std::min(n, static_cast<std::size_t>(std::max(0.0, std::ceil(p.end * sample_rate))));
    const double w = 2.0 * std::numbers::pi * p.freq;
    for (std::size_t i = first; i < last; ++i) out.samples[i] += p.amp * std::sin(w * warped[i]);
  }

  double peak = 0.0;
  for (double s : out.samples) peak = std::max(peak, std::abs(s));
  if (peak > 1.0) {
    for (double& s : out.samples) s /= peak;
  }
  return out;
}

}  // namespace cantus::signal
