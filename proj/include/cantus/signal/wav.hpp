#pragma once

#include <filesystem>

#include "cantus/signal/types.hpp"

namespace cantus::signal {

/// 16-bit PCM mono little-endian only; anything else is rejected.
AudioBuffer read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

}  // namespace cantus::signal
