#include "cantus/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "cantus/error.hpp"

namespace cantus::io {

namespace fs = std::filesystem;

namespace {

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

}  // namespace

void write_f32(const fs::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  std::vector<std::uint32_t> words(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    words[i] = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
  }
  out.write(reinterpret_cast<const char*>(words.data()),
            static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<double> read_f32(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size % 4 != 0) throw ValidationError("f32 file size not a multiple of 4: " + path.string());
  in.seekg(0);
  std::vector<std::uint32_t> words(size / 4);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("read failed: " + path.string());
  std::vector<double> out(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    out[i] = static_cast<double>(std::bit_cast<float>(to_le(words[i])));
  }
  return out;
}

fs::path sidecar_path(const fs::path& path) { return fs::path(path.string() + ".json"); }

void write_matrix(const fs::path& path, const Matrix& m, const std::string& rows_key,
                  const std::string& cols_key, json extra) {
  write_f32(path, std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
  extra[rows_key] = m.rows();
  extra[cols_key] = m.cols();
  write_json(sidecar_path(path), extra);
}

Matrix read_matrix(const fs::path& path, const std::string& rows_key,
                   const std::string& cols_key) {
  const json meta = read_json(sidecar_path(path));
  if (!meta.contains(rows_key) || !meta.contains(cols_key)) {
    throw ValidationError("sidecar of " + path.string() + " lacks '" + rows_key + "'/'" +
                          cols_key + "'");
  }
  const auto rows = meta.at(rows_key).get<Eigen::Index>();
  const auto cols = meta.at(cols_key).get<Eigen::Index>();
  const auto values = read_f32(path);
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != values.size()) {
    throw ValidationError("sidecar shape does not match data size: " + path.string());
  }
  Matrix m(rows, cols);
  std::memcpy(m.data(), values.data(), values.size() * sizeof(double));
  return m;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

void round_to_f32(Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = to_f32(m.data()[i]);
}

}  // namespace cantus::io
