#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "cantus/neural/layers.hpp"

namespace cantus::nn {

/// Writes every tensor as raw little-endian f32 to `path` and a manifest
/// {"tensors": [{name, shape, offset}], "meta": meta} to `path.json`.
void save_checkpoint(const std::filesystem::path& path, const ParamList& tensors,
                     const nlohmann::json& meta = nlohmann::json::object());

/// Fills the given tensors by name. Every requested name must be present with
/// a matching shape. Returns the stored meta object.
nlohmann::json load_checkpoint(const std::filesystem::path& path, const ParamList& tensors);

nlohmann::json read_checkpoint_meta(const std::filesystem::path& path);

}  // namespace cantus::nn
