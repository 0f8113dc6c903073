#pragma once

#include <vector>

#include "cantus/signal/types.hpp"

namespace cantus::signal::detail {

/// Periodic Hann of win_size, zero-padded and centered to fft_size.
std::vector<double> padded_hann(const StftConfig& cfg);

/// Reflect-padded frame i of the signal, multiplied by the padded window.
void windowed_frame(const std::vector<double>& samples, const StftConfig& cfg,
                    const std::vector<double>& window, std::size_t frame, double* out);

}  // namespace cantus::signal::detail
