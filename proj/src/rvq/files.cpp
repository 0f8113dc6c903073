#include <cstring>
#include <fstream>
#include <iterator>

#include "cantus/error.hpp"
#include "cantus/io.hpp"
#include "cantus/rvq/rvq.hpp"

namespace cantus::rvq {

namespace {

constexpr char kMagic[4] = {'H', 'S', 'C', '1'};
constexpr std::size_t kHeaderBytes = 4 + 3 * 2 + 3 * 4;

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename T>
T get(std::span<const std::uint8_t> in, std::size_t& pos) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(in[pos + i]) << (8 * i));
  pos += sizeof(T);
  return v;
}

void check_u16(int v, const char* what) {
  if (v < 0 || v > 0xffff) throw ValidationError(std::string(what) + " does not fit in 16 bits");
}

}  // namespace

std::vector<std::uint8_t> serialize(const Bitstream& b) {
  b.codes.validate();
  check_u16(b.codes.C, "C");
  check_u16(b.codes.K, "K");
  check_u16(b.codes.D, "D");
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(b.codes.C));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(b.codes.K));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(b.codes.D));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(b.codes.frames()));
  put<std::uint32_t>(out, b.sample_rate);
  put<std::uint32_t>(out, b.hop);
  for (int t = 0; t < b.codes.frames(); ++t) {
    for (int c = 0; c < b.codes.C; ++c) put<std::uint16_t>(out, static_cast<std::uint16_t>(b.codes.indices(c, t)));
  }
  return out;
}

Bitstream deserialize(std::span<const std::uint8_t> in) {
  if (in.size() < kHeaderBytes || std::memcmp(in.data(), kMagic, 4) != 0) {
    throw ValidationError("not a codec bitstream (bad magic or short header)");
  }
  std::size_t pos = 4;
  Bitstream b;
  b.codes.C = get<std::uint16_t>(in, pos);
  b.codes.K = get<std::uint16_t>(in, pos);
  b.codes.D = get<std::uint16_t>(in, pos);
  const auto frames = get<std::uint32_t>(in, pos);
  b.sample_rate = get<std::uint32_t>(in, pos);
  b.hop = get<std::uint32_t>(in, pos);
  const std::size_t expected = kHeaderBytes + 2ULL * frames * static_cast<std::size_t>(b.codes.C);
  if (in.size() != expected) {
    throw ValidationError("bitstream size " + std::to_string(in.size()) + " does not match header (" +
                          std::to_string(expected) + " bytes)");
  }
  b.codes.indices.resize(b.codes.C, frames);
  for (std::uint32_t t = 0; t < frames; ++t) {
    for (int c = 0; c < b.codes.C; ++c) b.codes.indices(c, t) = get<std::uint16_t>(in, pos);
  }
  b.codes.validate();
  return b;
}

void write_bitstream(const std::filesystem::path& path, const Bitstream& b) {
  const auto bytes = serialize(b);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

Bitstream read_bitstream(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

void save_codebooks(const std::filesystem::path& path, const RvqCoder& coder) {
  coder.validate();
  std::vector<double> flat;
  for (const auto& b : coder.books) flat.insert(flat.end(), b.entries.data(), b.entries.data() + b.entries.size());
  io::write_f32(path, flat);
  io::write_json(io::sidecar_path(path),
                 {{"C", coder.C()}, {"K", coder.K()}, {"D", coder.D()}, {"pin_zero", coder.config.pin_zero}});
}

RvqCoder load_codebooks(const std::filesystem::path& path) {
  const auto meta = io::read_json(io::sidecar_path(path));
  const int C = meta.at("C").get<int>();
  const int K = meta.at("K").get<int>();
  const int D = meta.at("D").get<int>();
  if (C < 1 || K < 1 || D < 1) throw ValidationError("codebook sidecar has non-positive sizes");
  const auto flat = io::read_f32(path);
  if (flat.size() != static_cast<std::size_t>(C) * K * D) {
    throw ValidationError("codebook file holds " + std::to_string(flat.size()) + " values, sidecar says " +
                          std::to_string(C * K * D));
  }
  std::vector<Matrix> entries;
  for (int c = 0; c < C; ++c) {
    Matrix e(K, D);
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(c) * K * D,
              flat.begin() + static_cast<std::ptrdiff_t>(c + 1) * K * D, e.data());
    entries.push_back(std::move(e));
  }
  return make_coder(entries, meta.value("pin_zero", false));
}

void save_ema_state(const std::filesystem::path& path, const RvqCoder& coder) {
  std::vector<double> flat;
  for (const auto& b : coder.books) {
    flat.insert(flat.end(), b.ema_counts.data(), b.ema_counts.data() + b.ema_counts.size());
    flat.insert(flat.end(), b.ema_sums.data(), b.ema_sums.data() + b.ema_sums.size());
    flat.insert(flat.end(), b.usage.data(), b.usage.data() + b.usage.size());
  }
  io::write_f32(path, flat);
  io::write_json(io::sidecar_path(path),
                 {{"C", coder.C()}, {"K", coder.K()}, {"D", coder.D()}, {"updates", coder.updates}});
}

void load_ema_state(const std::filesystem::path& path, RvqCoder& coder) {
  const auto meta = io::read_json(io::sidecar_path(path));
  if (meta.at("C").get<int>() != coder.C() || meta.at("K").get<int>() != coder.K() ||
      meta.at("D").get<int>() != coder.D()) {
    throw ValidationError("EMA state does not match the codebooks");
  }
  const auto flat = io::read_f32(path);
  const std::size_t per = static_cast<std::size_t>(coder.K()) * (coder.D() + 2);
  if (flat.size() != per * coder.books.size()) throw ValidationError("EMA state file has the wrong size");
  auto it = flat.begin();
  for (auto& b : coder.books) {
    std::copy(it, it + b.K(), b.ema_counts.data());
    it += b.K();
    std::copy(it, it + b.ema_sums.size(), b.ema_sums.data());
    it += b.ema_sums.size();
    std::copy(it, it + b.K(), b.usage.data());
    it += b.K();
  }
  coder.updates = meta.at("updates").get<std::int64_t>();
}

}  // namespace cantus::rvq
