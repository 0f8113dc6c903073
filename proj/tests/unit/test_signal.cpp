#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"

#include "cantus/error.hpp"
#include "cantus/signal/pitch.hpp"
#include "cantus/signal/pitch_io.hpp"
#include "cantus/signal/spectral.hpp"
#include "cantus/signal/synth.hpp"
#include "cantus/signal/wav.hpp"

using namespace cantus;
using namespace cantus::signal;

namespace {

AudioBuffer sine(double freq, double amp, double seconds, int sr = 24000) {
  const Partial p{freq, amp, 0.0, seconds};
  return synth_tone(std::span(&p, 1), sr, seconds);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// Direct O(N^2) DFT magnitude of frame f, reflect-padded and Hann-windowed.
std::vector<double> direct_dft_frame(const std::vector<double>& x, const StftConfig& cfg, int f) {
  const int n = static_cast<int>(x.size());
  std::vector<double> frame(static_cast<std::size_t>(cfg.fft_size), 0.0);
  const int off = (cfg.fft_size - cfg.win_size) / 2;
  for (int k = 0; k < cfg.win_size; ++k) {
    long long i = static_cast<long long>(f) * cfg.hop_size - cfg.fft_size / 2 + off + k;
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * k / cfg.win_size);
    frame[static_cast<std::size_t>(off + k)] = w * x[static_cast<std::size_t>(i)];
  }
  std::vector<double> mag(static_cast<std::size_t>(cfg.bins()));
  for (int b = 0; b < cfg.bins(); ++b) {
    std::complex<double> acc = 0.0;
    for (int t = 0; t < cfg.fft_size; ++t) {
      acc += frame[static_cast<std::size_t>(t)] *
             std::polar(1.0, -2.0 * std::numbers::pi * b * t / cfg.fft_size);
    }
    mag[static_cast<std::size_t>(b)] = std::abs(acc);
  }
  return mag;
}

}  // namespace

TEST_CASE("stft of silence is all zero") {
  AudioBuffer silence{std::vector<double>(24000, 0.0), 24000};
  const auto spec = stft(silence, {});
  CHECK(spec.bins() == 1025);
  CHECK(spec.frames() == static_cast<Eigen::Index>(24000 / 256 + 1));
  CHECK(spec.data.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stft of a 440 Hz sine peaks at bin 38 and matches a direct DFT") {
  const auto audio = sine(440.0, 0.5, 1.0);
  const StftConfig cfg;
  const auto spec = stft(audio, cfg);
  // Frames whose window reaches into the reflected padding are excluded: the
  // mirrored sine is phase-inverted there and the peak can shift by one bin.
  const Eigen::Index edge = cfg.fft_size / 2 / cfg.hop_size;
  for (Eigen::Index f = edge; f < spec.frames() - edge; ++f) {
    Eigen::Index arg = 0;
    spec.data.row(f).maxCoeff(&arg);
    CHECK(arg == 38);
  }
  for (int f : {0, 7, 50}) {
    const auto ref = direct_dft_frame(audio.samples, cfg, f);
    const double peak = *std::max_element(ref.begin(), ref.end());
    for (int b = 0; b < cfg.bins(); ++b) {
      CHECK(std::abs(spec.data(f, b) - ref[static_cast<std::size_t>(b)]) <= 1e-9 * peak);
    }
  }
}

TEST_CASE("stft obeys Parseval per frame") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 0.3);
  AudioBuffer audio;
  for (int i = 0; i < 6000; ++i) audio.samples.push_back(std::clamp(nd(rng), -1.0, 1.0));
  const StftConfig cfg;
  const auto spec = stft(audio, cfg);
  for (Eigen::Index f = 0; f < spec.frames(); ++f) {
    // time-domain energy of the windowed frame, built independently
    double energy = 0.0;
    const int n = static_cast<int>(audio.size());
    for (int k = 0; k < cfg.fft_size; ++k) {
      long long i = f * cfg.hop_size - cfg.fft_size / 2 + k;
      if (i < 0) i = -i;
      if (i >= n) i = 2 * (n - 1) - i;
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * k / cfg.win_size);
      energy += std::pow(w * audio.samples[static_cast<std::size_t>(i)], 2);
    }
    double spec_energy = 0.0;
    for (Eigen::Index b = 0; b < spec.bins(); ++b) {
      const double m2 = spec.data(f, b) * spec.data(f, b);
      spec_energy += (b == 0 || b == spec.bins() - 1) ? m2 : 2.0 * m2;
    }
    spec_energy /= cfg.fft_size;
    CHECK(std::abs(energy - spec_energy) / energy < 1e-6);
  }
}

TEST_CASE("stft scales exactly with amplitude") {
  const auto a = sine(300.0, 0.3, 0.3);
  AudioBuffer b = a;
  for (double& s : b.samples) s *= -2.0;
  const auto sa = stft(a, {});
  const auto sb = stft(b, {});
  CHECK((sb.data - 2.0 * sa.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stft rejects empty audio and invalid configs") {
  CHECK_THROWS_AS(stft(AudioBuffer{}, {}), ValidationError);
  CHECK_THROWS_AS(stft(sine(100, 0.1, 0.1), StftConfig{1024, 2048, 256}), ValidationError);
  CHECK_THROWS_AS(stft(sine(100, 0.1, 0.1), StftConfig{2048, 2048, 4096}), ValidationError);
  CHECK_THROWS_AS(stft(sine(100, 0.1, 0.1), StftConfig{2048, 2048, 0}), ValidationError);
}

TEST_CASE("mel projection") {
  const int sr = 24000;
  const StftConfig cfg;
  Spectrogram lin;
  lin.config = cfg;
  lin.sample_rate = sr;

  SUBCASE("zero in, zero out") {
    lin.data = Matrix::Zero(3, cfg.bins());
    const auto mel = mel_project(lin, 128, 0.0, 12000.0);
    CHECK(mel.kind == SpectrogramKind::mel);
    CHECK(mel.frames() == 3);
    CHECK(mel.bins() == 128);
    CHECK(mel.data.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("every interior bin feeds some filter and peaks are unit height") {
    const Matrix fb = mel_filterbank(128, cfg.fft_size, sr, 0.0, 12000.0);
    for (int k = 1; k < cfg.bins() - 1; ++k) CHECK(fb.col(k).sum() > 0.0);
    CHECK(fb.maxCoeff() <= 1.0);
    for (Eigen::Index m = 0; m < fb.rows(); ++m) CHECK(fb.row(m).maxCoeff() > 0.5);
  }

  SUBCASE("impulse reaches at most the two straddling filters, matching an explicit filterbank") {
    // Independent triangle construction on the HTK mel scale.
    auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
    auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
    const int bins = 40;
    std::vector<double> edge(bins + 2);
    for (int i = 0; i < bins + 2; ++i) edge[i] = hz(mel(100.0) + (mel(8000.0) - mel(100.0)) * i / (bins + 1));
    for (int b : {20, 97, 301, 640}) {
      lin.data = Matrix::Zero(1, cfg.bins());
      lin.data(0, b) = 1.0;
      const auto out = mel_project(lin, bins, 100.0, 8000.0);
      const double f = b * static_cast<double>(sr) / cfg.fft_size;
      int nonzero = 0;
      for (int m = 0; m < bins; ++m) {
        const double lo = edge[m], mid = edge[m + 1], hi = edge[m + 2];
        double w = 0.0;
        if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
        if (f > mid && f < hi) w = (hi - f) / (hi - mid);
        CHECK(out.data(0, m) == doctest::Approx(w).epsilon(1e-12));
        nonzero += out.data(0, m) > 0.0;
      }
      CHECK(nonzero <= 2);
    }
  }

  SUBCASE("linearity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    Matrix a(4, cfg.bins()), b(4, cfg.bins());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a.data()[i] = u(rng);
      b.data()[i] = u(rng);
    }
    lin.data = a;
    const auto ma = mel_project(lin, 128, 0.0, 12000.0);
    lin.data = b;
    const auto mb = mel_project(lin, 128, 0.0, 12000.0);
    lin.data = a + b;
    const auto mab = mel_project(lin, 128, 0.0, 12000.0);
    CHECK((mab.data - ma.data - mb.data).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("errors") {
    lin.data = Matrix::Zero(1, cfg.bins());
    CHECK_THROWS_AS(mel_project(lin, 0, 0.0, 12000.0), ValidationError);
    CHECK_THROWS_AS(mel_project(lin, 10, 5000.0, 1000.0), ValidationError);
    CHECK_THROWS_AS(mel_project(lin, 10, 0.0, 13000.0), ValidationError);
    const auto mel = mel_project(lin, 10, 0.0, 12000.0);
    CHECK_THROWS_AS(mel_project(mel, 10, 0.0, 12000.0), ValidationError);
  }
}

TEST_CASE("estimate_f0 on a 220 Hz sine") {
  const auto track = estimate_f0(sine(220.0, 0.5, 1.0), {});
  CHECK(track.size() == 24000 / 256 + 1);
  CHECK(std::all_of(track.voiced.begin(), track.voiced.end(), [](bool v) { return v; }));
  CHECK(std::abs(median(track.f0) - 220.0) <= 3.0);
}

TEST_CASE("estimate_f0 median within 2% across the singing range") {
  for (double f : {80.0, 123.0, 196.0, 311.0, 440.0, 587.0, 777.0, 1000.0}) {
    CAPTURE(f);
    const auto track = estimate_f0(sine(f, 0.4, 0.5), {});
    CHECK(std::abs(median(track.f0) - f) / f < 0.02);
  }
}

TEST_CASE("estimate_f0 on noise and silence") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  AudioBuffer noise;
  for (int i = 0; i < 24000; ++i) noise.samples.push_back(u(rng));
  const auto tn = estimate_f0(noise, {});
  const auto unvoiced = std::count(tn.voiced.begin(), tn.voiced.end(), false);
  CHECK(static_cast<double>(unvoiced) >= 0.9 * static_cast<double>(tn.size()));

  AudioBuffer silence{std::vector<double>(12000, 0.0), 24000};
  const auto ts = estimate_f0(silence, {});
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK_FALSE(ts.voiced[i]);
    CHECK(ts.f0[i] == 0.0);
    CHECK(ts.periodicity[i] == 0.0);
  }
  CHECK_THROWS_AS(estimate_f0(silence, {}, PitchConfig{40.0, 1000.0, 0.5}), ValidationError);
  CHECK_THROWS_AS(estimate_f0(silence, {}, PitchConfig{60.0, 3000.0, 0.5}), ValidationError);
}

TEST_CASE("estimate_f0 from a mel spectrogram of a harmonic tone") {
  std::vector<Partial> parts;
  const double f0 = 293.66;
  for (int k = 1; k <= 5; ++k) parts.push_back({k * f0, 0.3 / k, 0.0, 0.6});
  const auto audio = synth_tone(parts, 24000, 0.6, Vibrato{5.5, 20.0});
  const auto mel = mel_project(stft(audio, {}), 128, 0.0, 12000.0);
  const auto track = estimate_f0_from_spectrogram(mel);
  std::vector<double> voiced;
  for (std::size_t i = 0; i < track.size(); ++i) {
    if (track.voiced[i]) voiced.push_back(track.f0[i]);
  }
  REQUIRE(voiced.size() >= track.size() * 8 / 10);
  CHECK(std::abs(1200.0 * std::log2(median(voiced) / f0)) < 50.0);
}

TEST_CASE("quantize_f0") {
  CHECK(quantize_f0_value(0.0) == 0);
  CHECK(quantize_f0_value(65.4) == 1);
  CHECK(quantize_f0_value(2093.0) == 128);
  CHECK(quantize_f0_value(30.0) == 1);
  CHECK(quantize_f0_value(5000.0) == 128);
  // direct evaluation of the bin formula
  auto oracle = [](double f) {
    return 1 + static_cast<int>(std::floor(128.0 * std::log(f / 65.4) / std::log(2093.0 / 65.4)));
  };
  CHECK(oracle(370.0) == 65);
  CHECK(quantize_f0_value(370.0) == 65);
  CHECK(quantize_f0_value(369.9) == 64);
  for (double f = 70.0; f < 2000.0; f *= 1.01) CHECK(quantize_f0_value(f) == oracle(f));

  int prev = 0;
  for (double f = 40.0; f < 2500.0; f *= 1.003) {
    const int q = quantize_f0_value(f);
    CHECK(q >= prev);
    prev = q;
  }
  PitchTrack t{{0.0, 220.0}, {0.1, 0.9}, {false, true}};
  const auto q = quantize_f0(t);
  CHECK(q[0] == 0);
  CHECK(q[1] == oracle(220.0));
  CHECK_THROWS_AS(quantize_f0_value(100.0, 1), ValidationError);
}

TEST_CASE("synth_tone") {
  SUBCASE("empty spec is silence of the requested length") {
    const auto a = synth_tone({}, 24000, 0.5);
    CHECK(a.size() == 12000);
    CHECK(std::all_of(a.samples.begin(), a.samples.end(), [](double s) { return s == 0.0; }));
  }
  SUBCASE("sine RMS") {
    const auto a = sine(440.0, 0.5, 1.0);
    double acc = 0.0;
    for (double s : a.samples) acc += s * s;
    const double rms = std::sqrt(acc / a.size());
    CHECK(std::abs(rms - 0.5 / std::sqrt(2.0)) / (0.5 / std::sqrt(2.0)) < 1e-3);
  }
  SUBCASE("vibrato range follows the cents depth") {
    const Vibrato v{5.0, 100.0};
    double lo = 1e9, hi = 0.0;
    for (int i = 0; i < 24000; ++i) {
      const double f = 440.0 * vibrato_ratio(v, i / 24000.0);
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    CHECK(lo == doctest::Approx(440.0 * std::pow(2.0, -100.0 / 1200.0)).epsilon(1e-6));
    CHECK(hi == doctest::Approx(440.0 * std::pow(2.0, 100.0 / 1200.0)).epsilon(1e-6));
    CHECK(lo == doctest::Approx(415.3).epsilon(1e-4));
    CHECK(hi == doctest::Approx(466.2).epsilon(1e-4));
    // the synthesized phase advances at the modulated rate: count zero crossings
    const Partial p{440.0, 0.5, 0.0, 1.0};
    const auto a = synth_tone(std::span(&p, 1), 24000, 1.0, v);
    int crossings = 0;
    for (std::size_t i = 1; i < a.size(); ++i) crossings += (a.samples[i - 1] < 0) != (a.samples[i] < 0);
    CHECK(std::abs(crossings - 880) <= 4);
  }
  SUBCASE("peak is bounded and output deterministic") {
    std::vector<Partial> parts{{200, 0.9, 0, 0.2}, {300, 0.9, 0, 0.2}, {500, 0.9, 0.1, 0.2}};
    const auto a = synth_tone(parts, 24000, 0.2, Vibrato{});
    const auto b = synth_tone(parts, 24000, 0.2, Vibrato{});
    CHECK(a.samples == b.samples);
    for (double s : a.samples) CHECK(std::abs(s) <= 1.0);
  }
  SUBCASE("aliasing frequencies are rejected") {
    const Partial p{12000.0, 0.1, 0.0, 0.1};
    CHECK_THROWS_AS(synth_tone(std::span(&p, 1), 24000, 0.1), ValidationError);
    const Partial q{11900.0, 0.1, 0.0, 0.1};
    CHECK_THROWS_AS(synth_tone(std::span(&q, 1), 24000, 0.1, Vibrato{5.0, 100.0}), ValidationError);
  }
}

TEST_CASE("WAV and pitch-track files") {
  const auto dir = std::filesystem::temp_directory_path() / "cantus_test_signal";
  std::filesystem::create_directories(dir);
  const auto a = sine(330.0, 0.7, 0.1);
  write_wav(dir / "a.wav", a);
  const auto b = read_wav(dir / "a.wav");
  REQUIRE(b.size() == a.size());
  CHECK(b.sample_rate == 24000);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.samples[i] - b.samples[i]) <= 1.0 / 32767.0);

  // Patch the header to stereo / 8-bit / float and expect rejection.
  auto patch = [&](std::size_t offset, std::uint16_t value, const char* name) {
    std::ifstream in(dir / "a.wav", std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    bytes[offset] = static_cast<char>(value & 0xff);
    bytes[offset + 1] = static_cast<char>(value >> 8);
    std::ofstream out(dir / name, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  };
  patch(22, 2, "stereo.wav");
  patch(34, 8, "u8.wav");
  patch(20, 3, "float.wav");
  CHECK_THROWS_AS(read_wav(dir / "stereo.wav"), ValidationError);
  CHECK_THROWS_AS(read_wav(dir / "u8.wav"), ValidationError);
  CHECK_THROWS_AS(read_wav(dir / "float.wav"), ValidationError);
  CHECK_THROWS_AS(read_wav(dir / "missing.wav"), IoError);

  PitchTrack t{{0.0, 220.0, 440.0}, {0.1, 0.9, 0.95}, {false, true, true}};
  write_pitch_track(dir / "p.json", t);
  const auto u = read_pitch_track(dir / "p.json");
  CHECK(u.f0 == t.f0);
  CHECK(u.voiced == t.voiced);
  std::filesystem::remove_all(dir);
}
