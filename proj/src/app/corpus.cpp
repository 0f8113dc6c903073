#include "cantus/app/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "cantus/error.hpp"
#include "cantus/io.hpp"
#include "cantus/rng.hpp"
#include "cantus/signal/pitch.hpp"
#include "cantus/signal/pitch_io.hpp"
#include "cantus/signal/spectral.hpp"
#include "cantus/signal/synth.hpp"
#include "cantus/signal/wav.hpp"

namespace cantus::app {

namespace fs = std::filesystem;
using nlohmann::json;

signal::PitchConfig pitch_config(const RunConfig& cfg) {
  return {cfg.f0_fmin, cfg.f0_fmax, cfg.voicing_threshold};
}

Matrix log_mel(const signal::AudioBuffer& audio, const RunConfig& cfg) {
  const auto mel = signal::mel_project(signal::stft(audio, cfg.stft()), cfg.mel_bins, cfg.fmin, cfg.fmax);
  return mel.data.cwiseMax(cfg.mel_floor).array().log().matrix();
}

signal::Spectrogram mel_from_log(const Matrix& log_mel, const RunConfig& cfg) {
  if (log_mel.cols() != cfg.mel_bins) {
    throw ValidationError("mel features have " + std::to_string(log_mel.cols()) + " bins, config expects " +
                          std::to_string(cfg.mel_bins));
  }
  signal::Spectrogram s;
  s.data = log_mel.array().exp().matrix();
  s.kind = signal::SpectrogramKind::mel;
  s.config = cfg.stft();
  s.sample_rate = cfg.sample_rate;
  s.fmin = cfg.fmin;
  s.fmax = cfg.fmax;
  return s;
}

signal::PitchTrack f0_from_log_mel(const Matrix& log_mel, const RunConfig& cfg) {
  return signal::estimate_f0_from_spectrogram(mel_from_log(log_mel, cfg), pitch_config(cfg));
}

condition::PhonemeTable corpus_phonemes() {
  condition::PhonemeTable t;
  const char* names[] = {"<rest>", "k", "n", "m", "s", "a", "i", "u", "o", "ng", "l"};
  for (int i = 0; i < 11; ++i) t.ids[names[i]] = i;
  return t;
}

namespace {

struct Formants {
  double f1, f2, gain;
};

// Rough vowel-like spectral envelopes; consonants s and k are noise.
std::optional<Formants> voicing_of(const std::string& ph) {
  if (ph == "a") return Formants{800, 1200, 1.0};
  if (ph == "i") return Formants{300, 2300, 1.0};
  if (ph == "u") return Formants{300, 800, 1.0};
  if (ph == "o") return Formants{500, 900, 1.0};
  if (ph == "l") return Formants{400, 1300, 0.6};
  if (ph == "n" || ph == "m" || ph == "ng") return Formants{250, 2500, 0.4};
  return std::nullopt;
}

std::string song_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "song_%03d", i);
  return buf;
}

struct Segment {
  int start = 0;
  int frames = 0;
  std::string phoneme;
  int midi = -1;  // -1 for rests
};

void synth_song(const fs::path& dir, const std::string& name, std::uint64_t seed, int index,
                const RunConfig& cfg, const condition::PhonemeTable& table) {
  auto rng = make_rng(seed, 0xc0b0, static_cast<std::uint64_t>(index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&](const std::vector<std::string>& from) {
    return from[std::uniform_int_distribution<std::size_t>(0, from.size() - 1)(rng)];
  };
  const std::vector<std::string> onsets = {"k", "n", "m", "s", "l"};
  const std::vector<std::string> vowels = {"a", "i", "u", "o"};
  const std::vector<std::string> codas = {"n", "m", "ng"};

  const double tempo = std::round(90.0 + 50.0 * unit(rng));
  const int notes = 10;
  const double frame_s = static_cast<double>(cfg.hop_size) / cfg.sample_rate;

  json score = json::object();
  score["tempo"] = tempo;
  score["syllables"] = json::array();
  std::vector<Segment> segments;
  int frame = 0;
  for (int n = 0; n < notes; ++n) {
    const int frames = std::uniform_int_distribution<int>(12, 40)(rng);
    const bool rest = n > 0 && unit(rng) < 0.12;
    json syl = json::object();
    syl["dur_s"] = frames * frame_s;
    if (rest) {
      syl["midi"] = nullptr;
      syl["nucleus"] = nullptr;
      segments.push_back({frame, frames, "<rest>", -1});
    } else {
      const int midi = std::uniform_int_distribution<int>(57, 69)(rng);
      condition::Syllable s;
      if (unit(rng) < 0.7) {
        const auto on = pick(onsets);
        syl["onset"] = on;
        s.onset = table.id(on);
      }
      const auto nuc = pick(vowels);
      syl["nucleus"] = nuc;
      s.nucleus = table.id(nuc);
      if (unit(rng) < 0.3) {
        const auto co = pick(codas);
        syl["coda"] = co;
        s.coda = table.id(co);
      }
      syl["midi"] = midi;
      const auto f = condition::assign_syllable_frames(s, frames);
      int at = frame;
      if (f.onset) segments.push_back({at, f.onset, syl["onset"].get<std::string>(), midi});
      at += f.onset;
      segments.push_back({at, f.nucleus, nuc, midi});
      at += f.nucleus;
      if (f.coda) segments.push_back({at, f.coda, syl["coda"].get<std::string>(), midi});
    }
    score["syllables"].push_back(syl);
    frame += frames;
  }
  const int total = frame;

  const signal::Vibrato vib{5.5, 30.0};
  std::vector<signal::Partial> partials;
  std::vector<std::pair<Segment, double>> noise;  // unvoiced segments and their level
  signal::PitchTrack truth;
  truth.f0.assign(total, 0.0);
  truth.periodicity.assign(total, 0.0);
  truth.voiced.assign(total, false);
  const double nyquist_guard = 0.45 * cfg.sample_rate;
  for (const auto& seg : segments) {
    if (seg.midi < 0) continue;
    const auto shape = voicing_of(seg.phoneme);
    if (!shape) {
      noise.push_back({seg, seg.phoneme == "s" ? 0.06 : 0.1});
      continue;
    }
    const double f0 = signal::midi_to_hz(seg.midi);
    std::vector<double> amps;
    for (int h = 1; h * f0 * 1.02 < std::min(nyquist_guard, cfg.fmax) && h <= 40; ++h) {
      const double f = h * f0;
      const double env = 1.0 + 2.0 * std::exp(-std::pow(f - shape->f1, 2) / (2 * 200.0 * 200.0)) +
                         1.5 * std::exp(-std::pow(f - shape->f2, 2) / (2 * 300.0 * 300.0));
      amps.push_back(env / std::pow(h, 0.8));
    }
    double sum = 0.0;
    for (double a : amps) sum += a;
    const double start = seg.start * frame_s;
    const double end = (seg.start + seg.frames) * frame_s;
    for (std::size_t h = 0; h < amps.size(); ++h) {
      partials.push_back({f0 * static_cast<double>(h + 1), 0.5 * shape->gain * amps[h] / sum, start, end});
    }
    for (int f = seg.start; f < seg.start + seg.frames; ++f) {
      truth.f0[f] = f0 * signal::vibrato_ratio(vib, f * frame_s);
      truth.periodicity[f] = 1.0;
      truth.voiced[f] = true;
    }
  }

  // F*hop - 1 samples gives exactly F centered STFT frames.
  const double duration = (static_cast<double>(total) * cfg.hop_size - 1.0) / cfg.sample_rate;
  auto audio = signal::synth_tone(partials, cfg.sample_rate, duration, vib);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (const auto& [seg, level] : noise) {
    const auto first = static_cast<std::size_t>(seg.start) * cfg.hop_size;
    const auto last = std::min(audio.samples.size(), static_cast<std::size_t>(seg.start + seg.frames) * cfg.hop_size);
    for (std::size_t i = first; i < last; ++i) audio.samples[i] += level * gauss(rng);
  }
  for (double& s : audio.samples) s = std::clamp(s, -1.0, 1.0);

  signal::write_wav(dir / (name + ".wav"), audio);
  io::write_json(dir / (name + ".json"), score);
  signal::write_pitch_track(dir / (name + ".f0.json"), truth);
}

}  // namespace

void generate_corpus(const fs::path& dir, int n_songs, std::uint64_t seed, const RunConfig& cfg) {
  if (n_songs < 1) throw ValidationError("need at least one song");
  cfg.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const auto table = corpus_phonemes();
  io::write_json(dir / "phonemes.json", table.to_json());
  json index = json::object();
  index["seed"] = seed;
  index["sample_rate"] = cfg.sample_rate;
  index["hop_size"] = cfg.hop_size;
  index["songs"] = json::array();
  for (int i = 0; i < n_songs; ++i) {
    const auto name = song_name(i);
    synth_song(dir, name, seed, i, cfg, table);
    index["songs"].push_back(name);
  }
  io::write_json(dir / "corpus.json", index);
}

Corpus load_corpus(const fs::path& dir, const RunConfig& cfg) {
  if (!fs::exists(dir / "corpus.json")) throw IoError("no corpus.json in " + dir.string());
  const auto index = io::read_json(dir / "corpus.json");
  Corpus c;
  c.table = condition::PhonemeTable::load(dir / "phonemes.json");
  for (const auto& entry : index.at("songs")) {
    Song s;
    s.name = entry.get<std::string>();
    s.score = condition::load_score(dir / (s.name + ".json"), c.table);
    s.grid = condition::expand_score(s.score, cfg.hop_size, cfg.sample_rate);
    const auto audio = signal::read_wav(dir / (s.name + ".wav"));
    if (audio.sample_rate != cfg.sample_rate) {
      throw ValidationError(s.name + ".wav is " + std::to_string(audio.sample_rate) + " Hz, config expects " +
                            std::to_string(cfg.sample_rate));
    }
    s.log_mel = log_mel(audio, cfg);
    if (s.log_mel.rows() != s.frames()) {
      throw ValidationError(s.name + ": score expands to " + std::to_string(s.frames()) + " frames but audio has " +
                            std::to_string(s.log_mel.rows()));
    }
    const auto f0_path = dir / (s.name + ".f0.json");
    s.f0 = fs::exists(f0_path) ? signal::read_pitch_track(f0_path)
                               : signal::estimate_f0(audio, cfg.stft(), pitch_config(cfg));
    if (static_cast<int>(s.f0.size()) != s.frames()) throw ValidationError(s.name + ": F0 track length mismatch");
    c.songs.push_back(std::move(s));
  }
  if (c.songs.empty()) throw ValidationError("corpus has no songs");
  return c;
}

}  // namespace cantus::app
