#include "cantus/signal/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "cantus/error.hpp"

namespace cantus::signal {

namespace {

std::uint32_t u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw ValidationError(path.string() + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  int sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t size = u32le(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw ValidationError(path.string() + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw ValidationError(path.string() + ": short fmt chunk");
      const unsigned char* f = bytes.data() + body;
      const auto format = u16le(f);
      const auto channels = u16le(f + 2);
      const auto bits = u16le(f + 14);
      if (format != 1) throw ValidationError(path.string() + ": only PCM WAV is supported (format tag " + std::to_string(format) + ")");
      if (channels != 1) throw ValidationError(path.string() + ": only mono WAV is supported (" + std::to_string(channels) + " channels)");
      if (bits != 16) throw ValidationError(path.string() + ": only 16-bit WAV is supported (" + std::to_string(bits) + " bits)");
      sample_rate = static_cast<int>(u32le(f + 4));
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw ValidationError(path.string() + ": missing fmt chunk");
  if (data == nullptr) throw ValidationError(path.string() + ": missing data chunk");

  AudioBuffer out;
  out.sample_rate = sample_rate;
  out.samples.resize(data_size / 2);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const auto v = static_cast<std::int16_t>(u16le(data + 2 * i));
    out.samples[i] = v / 32768.0;
  }
  out.validate();
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  audio.validate();
  const auto n = static_cast<std::uint32_t>(audio.samples.size());
  std::vector<unsigned char> b;
  b.reserve(44 + 2 * static_cast<std::size_t>(n));
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put_u32(b, 36 + 2 * n);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(b, 16);
  put_u16(b, 1);
  put_u16(b, 1);
  put_u32(b, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(b, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_u16(b, 2);
  put_u16(b, 16);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put_u32(b, 2 * n);
  for (double s : audio.samples) {
    const double q = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    put_u16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace cantus::signal
