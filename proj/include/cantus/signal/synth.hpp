#pragma once

#include <optional>
#include <span>

#include "cantus/signal/types.hpp"

namespace cantus::signal {

struct Partial {
  double freq = 0.0;  // Hz
  double amp = 0.0;
  double start = 0.0;  // s
  double end = 0.0;    // s, exclusive
};

struct Vibrato {
  double rate_hz = 5.5;
  double depth_cents = 30.0;
};

/// Sum of sinusoids sharing one vibrato phase track. Deterministic; the output
/// is rescaled when its peak would exceed 1.
AudioBuffer synth_tone(std::span<const Partial> partials, int sample_rate, double duration,
                       std::optional<Vibrato> vibrato = std::nullopt);

/// Instantaneous frequency multiplier applied by the vibrato at time t.
double vibrato_ratio(const Vibrato& v, double t);

}  // namespace cantus::signal
