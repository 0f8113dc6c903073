#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cantus::condition {

/// Phoneme id and pitch token used for rests.
inline constexpr int kRest = 0;
inline constexpr int kPitchTokens = 129;     // rest + MIDI 0..127
inline constexpr int kDurationTokens = 513;  // 64th notes, 1..512
inline constexpr int kTempoTokens = 257;     // bpm 16..256
inline constexpr int kMinTempo = 16;
inline constexpr int kMaxTempo = 256;
inline constexpr int kMaxDurationToken = 512;

struct Note {
  std::optional<int> midi;  // empty = rest
  double duration = 0.0;    // seconds
  double tempo = 120.0;     // bpm
  bool is_rest() const { return !midi.has_value(); }
};

struct Syllable {
  std::optional<int> onset;
  int nucleus = 0;
  std::optional<int> coda;
  Note note;
};

struct MusicalScore {
  std::vector<Syllable> syllables;
  int alphabet_size = 1;
  void validate() const;
};

/// Phoneme names to ids. Id 0 is the rest token.
struct PhonemeTable {
  std::map<std::string, int> ids;
  int size() const;  // max id + 1
  int id(const std::string& name) const;
  std::vector<std::string> names() const;  // indexed by id, gaps empty

  static PhonemeTable from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static PhonemeTable load(const std::filesystem::path& path);
};

MusicalScore parse_score(const nlohmann::json& j, const PhonemeTable& table);
MusicalScore load_score(const std::filesystem::path& path, const PhonemeTable& table);
nlohmann::json score_to_json(const MusicalScore& score, const PhonemeTable& table);

struct SyllableFrames {
  int onset = 0;
  int nucleus = 0;
  int coda = 0;
};

/// Onset and coda take at most 3 frames each, nucleus the rest. Short notes
/// keep one frame for the nucleus and split the remainder between the present
/// onset and coda, onset first on odd counts.
SyllableFrames assign_syllable_frames(const Syllable& syl, int note_frames);

struct DurationTokens {
  int token = 1;   // count of 64th notes, in [1, 512]
  int frames = 1;  // >= 1
};
DurationTokens duration_tokens(const Note& note, int hop, int sample_rate);

/// round(bpm) clamped to [16, 256].
int tempo_token(double bpm);

struct NoteSpan {
  int start = 0;
  int frames = 0;
  std::optional<int> midi;
};

/// Frame-level token grid. Pitch tokens are midi + 1 with 0 for rests.
struct FrameGrid {
  std::vector<int> phoneme;
  std::vector<int> pitch;
  std::vector<int> duration;
  std::vector<int> tempo;
  std::vector<NoteSpan> notes;
  int frames() const { return static_cast<int>(phoneme.size()); }
};

FrameGrid expand_score(const MusicalScore& score, int hop, int sample_rate);

}  // namespace cantus::condition
