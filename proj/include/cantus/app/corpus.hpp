#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cantus/app/config.hpp"
#include "cantus/condition/score.hpp"
#include "cantus/signal/pitch.hpp"
#include "cantus/signal/types.hpp"

namespace cantus::app {

/// Natural-log mel magnitudes, floored at cfg.mel_floor. frames x mel_bins.
Matrix log_mel(const signal::AudioBuffer& audio, const RunConfig& cfg);
/// Inverse of the log with the same STFT metadata, ready for pitch tracking.
signal::Spectrogram mel_from_log(const Matrix& log_mel, const RunConfig& cfg);
signal::PitchTrack f0_from_log_mel(const Matrix& log_mel, const RunConfig& cfg);
signal::PitchConfig pitch_config(const RunConfig& cfg);

/// Phoneme inventory of the synthetic corpus.
condition::PhonemeTable corpus_phonemes();

struct Song {
  std::string name;
  condition::MusicalScore score;
  condition::FrameGrid grid;
  Matrix log_mel;
  signal::PitchTrack f0;  // ground truth from synthesis
  int frames() const { return grid.frames(); }
};

struct Corpus {
  condition::PhonemeTable table;
  std::vector<Song> songs;
};

/// Writes song_XXX.{wav,json,f0.json}, phonemes.json and corpus.json. Scores
/// match the audio frame for frame under cfg's STFT.
void generate_corpus(const std::filesystem::path& dir, int n_songs, std::uint64_t seed,
                     const RunConfig& cfg);
Corpus load_corpus(const std::filesystem::path& dir, const RunConfig& cfg);

}  // namespace cantus::app
