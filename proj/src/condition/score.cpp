#include "cantus/condition/score.hpp"

#include <algorithm>
#include <cmath>

#include "cantus/error.hpp"
#include "cantus/io.hpp"

namespace cantus::condition {

using nlohmann::json;

void MusicalScore::validate() const {
  if (syllables.empty()) throw ValidationError("score has no syllables");
  if (alphabet_size < 1) throw ValidationError("phoneme alphabet must be non-empty");
  auto check_id = [&](int id) {
    if (id < 0 || id >= alphabet_size) {
      throw ValidationError("phoneme id " + std::to_string(id) + " outside alphabet of " +
                            std::to_string(alphabet_size));
    }
  };
  for (std::size_t i = 0; i < syllables.size(); ++i) {
    const auto& s = syllables[i];
    if (!(s.note.duration > 0.0) || !std::isfinite(s.note.duration)) {
      throw ValidationError("syllable " + std::to_string(i) + " has non-positive duration");
    }
    if (!(s.note.tempo > 0.0) || !std::isfinite(s.note.tempo)) {
      throw ValidationError("syllable " + std::to_string(i) + " has non-positive tempo");
    }
    if (s.note.midi && (*s.note.midi < 0 || *s.note.midi > 127)) {
      throw ValidationError("syllable " + std::to_string(i) + " has MIDI pitch outside 0..127");
    }
    if (s.note.is_rest()) continue;
    check_id(s.nucleus);
    if (s.onset) check_id(*s.onset);
    if (s.coda) check_id(*s.coda);
  }
}

int PhonemeTable::size() const {
  int m = 0;
  for (const auto& [name, id] : ids) m = std::max(m, id);
  return m + 1;
}

int PhonemeTable::id(const std::string& name) const {
  auto it = ids.find(name);
  if (it == ids.end()) throw ValidationError("unknown phoneme '" + name + "'");
  return it->second;
}

std::vector<std::string> PhonemeTable::names() const {
  std::vector<std::string> out(static_cast<std::size_t>(size()));
  for (const auto& [name, id] : ids) out[static_cast<std::size_t>(id)] = name;
  return out;
}

PhonemeTable PhonemeTable::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("phoneme table must be a JSON object of name -> id");
  PhonemeTable t;
  for (const auto& [name, v] : j.items()) {
    if (!v.is_number_integer() || v.get<int>() < 0) {
      throw ValidationError("phoneme '" + name + "' needs a non-negative integer id");
    }
    t.ids[name] = v.get<int>();
  }
  return t;
}

json PhonemeTable::to_json() const {
  json j = json::object();
  for (const auto& [name, id] : ids) j[name] = id;
  return j;
}

PhonemeTable PhonemeTable::load(const std::filesystem::path& path) { return from_json(io::read_json(path)); }

MusicalScore parse_score(const json& j, const PhonemeTable& table) {
  if (!j.is_object() || !j.contains("syllables") || !j["syllables"].is_array()) {
    throw ValidationError("score JSON needs a \"syllables\" array");
  }
  const double tempo = j.value("tempo", 120.0);
  MusicalScore score;
  score.alphabet_size = table.size();
  for (const auto& s : j["syllables"]) {
    Syllable syl;
    syl.note.tempo = s.value("tempo", tempo);
    if (!s.contains("dur_s") || !s["dur_s"].is_number()) throw ValidationError("syllable needs numeric dur_s");
    syl.note.duration = s["dur_s"].get<double>();
    if (s.contains("midi") && !s["midi"].is_null()) syl.note.midi = s["midi"].get<int>();
    if (!syl.note.is_rest()) {
      if (!s.contains("nucleus") || !s["nucleus"].is_string()) {
        throw ValidationError("sung syllable needs a nucleus phoneme");
      }
      syl.nucleus = table.id(s["nucleus"].get<std::string>());
      if (s.contains("onset") && !s["onset"].is_null()) syl.onset = table.id(s["onset"].get<std::string>());
      if (s.contains("coda") && !s["coda"].is_null()) syl.coda = table.id(s["coda"].get<std::string>());
    }
    score.syllables.push_back(syl);
  }
  score.validate();
  return score;
}

MusicalScore load_score(const std::filesystem::path& path, const PhonemeTable& table) {
  return parse_score(io::read_json(path), table);
}

json score_to_json(const MusicalScore& score, const PhonemeTable& table) {
  const auto names = table.names();
  json syls = json::array();
  double tempo = score.syllables.empty() ? 120.0 : score.syllables.front().note.tempo;
  for (const auto& s : score.syllables) {
    json o;
    o["dur_s"] = s.note.duration;
    if (s.note.tempo != tempo) o["tempo"] = s.note.tempo;
    if (s.note.is_rest()) {
      o["midi"] = nullptr;
      o["onset"] = nullptr;
      o["nucleus"] = nullptr;
      o["coda"] = nullptr;
    } else {
      o["midi"] = *s.note.midi;
      o["onset"] = s.onset ? json(names[*s.onset]) : json(nullptr);
      o["nucleus"] = names[s.nucleus];
      o["coda"] = s.coda ? json(names[*s.coda]) : json(nullptr);
    }
    syls.push_back(o);
  }
  return {{"tempo", tempo}, {"syllables", syls}};
}

SyllableFrames assign_syllable_frames(const Syllable& syl, int note_frames) {
  if (note_frames < 1) throw ValidationError("a note needs at least one frame");
  const int rem = note_frames - 1;
  SyllableFrames f;
  if (syl.onset && syl.coda) {
    f.onset = std::min(3, (rem + 1) / 2);
    f.coda = std::min(3, rem / 2);
  } else if (syl.onset) {
    f.onset = std::min(3, rem);
  } else if (syl.coda) {
    f.coda = std::min(3, rem);
  }
  f.nucleus = note_frames - f.onset - f.coda;
  return f;
}

DurationTokens duration_tokens(const Note& note, int hop, int sample_rate) {
  if (hop < 1 || sample_rate < 1) throw ValidationError("hop and sample rate must be positive");
  if (!(note.duration > 0.0) || !(note.tempo > 0.0)) throw ValidationError("note needs positive duration and tempo");
  const double sixty_fourth = (60.0 / note.tempo) / 16.0;
  DurationTokens d;
  d.token = static_cast<int>(std::clamp(std::round(note.duration / sixty_fourth), 1.0,
                                        static_cast<double>(kMaxDurationToken)));
  d.frames = std::max(1, static_cast<int>(std::lround(note.duration * sample_rate / hop)));
  return d;
}

int tempo_token(double bpm) {
  if (!(bpm > 0.0) || !std::isfinite(bpm)) throw ValidationError("tempo must be positive");
  return static_cast<int>(std::clamp(std::round(bpm), static_cast<double>(kMinTempo), static_cast<double>(kMaxTempo)));
}

FrameGrid expand_score(const MusicalScore& score, int hop, int sample_rate) {
  score.validate();
  FrameGrid g;
  for (const auto& syl : score.syllables) {
    const auto d = duration_tokens(syl.note, hop, sample_rate);
    const int pitch = syl.note.is_rest() ? kRest : *syl.note.midi + 1;
    const int tempo = tempo_token(syl.note.tempo);
    g.notes.push_back({g.frames(), d.frames, syl.note.midi});
    auto push = [&](int phoneme, int count) {
      for (int i = 0; i < count; ++i) {
        g.phoneme.push_back(phoneme);
        g.pitch.push_back(pitch);
        g.duration.push_back(d.token);
        g.tempo.push_back(tempo);
      }
    };
    if (syl.note.is_rest()) {
      push(kRest, d.frames);
      continue;
    }
    const auto f = assign_syllable_frames(syl, d.frames);
    push(syl.onset.value_or(kRest), f.onset);
    push(syl.nucleus, f.nucleus);
    push(syl.coda.value_or(kRest), f.coda);
  }
  return g;
}

}  // namespace cantus::condition
