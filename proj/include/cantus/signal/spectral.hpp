#pragma once

#include "cantus/signal/types.hpp"

namespace cantus::signal {

/// Magnitude STFT with reflect padding of fft_size/2 on both sides.
Spectrogram stft(const AudioBuffer& audio, const StftConfig& cfg);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular unit-peak filters on the HTK mel scale, mel_bins x (fft_size/2+1).
Matrix mel_filterbank(int mel_bins, int fft_size, int sample_rate, double fmin, double fmax);

Spectrogram mel_project(const Spectrogram& spec, int mel_bins, double fmin, double fmax);

/// Approximate linear magnitudes from a mel spectrogram: each linear bin takes
/// the weighted average of the bandwidth-normalized filters covering it.
Spectrogram mel_to_linear(const Spectrogram& mel);

}  // namespace cantus::signal
