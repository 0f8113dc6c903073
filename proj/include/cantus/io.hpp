#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cantus/types.hpp"

namespace cantus::io {

using nlohmann::json;

/// Raw little-endian float32 arrays. Values are narrowed from double on write.
void write_f32(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_f32(const std::filesystem::path& path);

/// Matrix stored as raw f32 (frame-major) plus a JSON sidecar at `path + ".json"`.
/// The sidecar receives `rows_key` and `cols_key` plus any extra fields.
void write_matrix(const std::filesystem::path& path, const Matrix& m,
                  const std::string& rows_key = "frames", const std::string& cols_key = "F",
                  json extra = json::object());
Matrix read_matrix(const std::filesystem::path& path, const std::string& rows_key = "frames",
                   const std::string& cols_key = "F");

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Narrow to float and back; the storage precision of every persisted value.
inline double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }
void round_to_f32(Matrix& m);

}  // namespace cantus::io
