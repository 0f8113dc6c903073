#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "cantus/signal/types.hpp"

namespace cantus::signal {

/// {"f0": [...], "periodicity": [...]}; voicing is f0 > 0.
nlohmann::json pitch_to_json(const PitchTrack& track);
PitchTrack pitch_from_json(const nlohmann::json& j);
PitchTrack read_pitch_track(const std::filesystem::path& path);
void write_pitch_track(const std::filesystem::path& path, const PitchTrack& track);

}  // namespace cantus::signal
