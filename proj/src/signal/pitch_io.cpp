#include "cantus/signal/pitch_io.hpp"

#include "cantus/error.hpp"
#include "cantus/io.hpp"

namespace cantus::signal {

nlohmann::json pitch_to_json(const PitchTrack& track) {
  return {{"f0", track.f0}, {"periodicity", track.periodicity}};
}

PitchTrack pitch_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("f0") || !j.contains("periodicity")) {
    throw ValidationError("pitch track JSON needs 'f0' and 'periodicity' arrays");
  }
  PitchTrack t;
  try {
    t.f0 = j.at("f0").get<std::vector<double>>();
    t.periodicity = j.at("periodicity").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("pitch track JSON: ") + e.what());
  }
  t.voiced.resize(t.f0.size());
  for (std::size_t i = 0; i < t.f0.size(); ++i) t.voiced[i] = t.f0[i] > 0.0;
  t.validate();
  return t;
}

PitchTrack read_pitch_track(const std::filesystem::path& path) {
  return pitch_from_json(io::read_json(path));
}

void write_pitch_track(const std::filesystem::path& path, const PitchTrack& track) {
  io::write_json(path, pitch_to_json(track));
}

}  // namespace cantus::signal
