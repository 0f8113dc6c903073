#pragma once

#include <vector>

#include "cantus/signal/types.hpp"

namespace cantus::signal {

struct PitchConfig {
  double fmin = 50.0;
  double fmax = 2100.0;
  double voicing_threshold = 0.5;
};

/// Autocorrelation pitch tracker. Each STFT frame's autocorrelation is divided
/// by the window's own autocorrelation, so a stationary periodic frame peaks
/// near 1 at its period. Frames align with stft() for the same config.
PitchTrack estimate_f0(const AudioBuffer& audio, const StftConfig& cfg,
                       const PitchConfig& pitch = {});

/// Same tracker driven by magnitudes only (circular autocorrelation via the
/// power spectrum). Mel input is first mapped back with mel_to_linear().
PitchTrack estimate_f0_from_spectrogram(const Spectrogram& spec, const PitchConfig& pitch = {});

inline constexpr double kF0QuantMin = 65.4;   // C2
inline constexpr double kF0QuantMax = 2093.0; // C7

/// 0 for unvoiced, otherwise 1..bins on a log-uniform grid over [C2, C7].
int quantize_f0_value(double f0, int bins = 128);
std::vector<int> quantize_f0(const PitchTrack& track, int bins = 128);

double midi_to_hz(double midi);
double hz_to_midi(double hz);

}  // namespace cantus::signal
