#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cantus/app/codec.hpp"
#include "cantus/app/corpus.hpp"
#include "cantus/app/log.hpp"
#include "cantus/condition/score.hpp"
#include "cantus/io.hpp"
#include "cantus/rvq/rvq.hpp"
#include "cantus/signal/pitch.hpp"
#include "cantus/signal/wav.hpp"
#include "cli_helpers.hpp"

using namespace cantus;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"({
  "codec": {"train_steps": 6, "window": 32},
  "latent": {"train_steps": 8, "window": 16, "batch": 1},
  "width": 16, "blocks": 2, "time_dim": 8,
  "cond": {"hidden": 16, "emb_dim": 8, "blocks": 1, "feature_dim": 8},
  "quantizers": 4, "codebook_size": 16, "latent_dim": 4,
  "steps": 10
})";

// One corpus, codec and latent model shared by the tests below.
struct Fixture {
  fs::path dir = cli::fresh_dir("cli");
  fs::path config = dir / "tiny.json";
  fs::path corpus = dir / "corpus";
  fs::path codec = dir / "codec";
  fs::path latent = dir / "latent";

  Fixture() {
    cli::write_text(config, kTiny);
    REQUIRE(cli::run("gen-corpus --config " + config.string() + " --songs 2 --seed 5 --out " + corpus.string(), dir).code == 0);
    REQUIRE(cli::run("train-codec --config " + config.string() + " --corpus " + corpus.string() + " --out " + codec.string(), dir).code == 0);
    REQUIRE(cli::run("train-latent --config " + config.string() + " --corpus " + corpus.string() + " --codec " +
                         codec.string() + " --out " + latent.string(), dir).code == 0);
  }
  std::string cfg() const { return "--config " + config.string() + " "; }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

app::RunConfig tiny_config() { return app::RunConfig::from_json(nlohmann::json::parse(kTiny)); }

}  // namespace

TEST_CASE("gen-corpus is bit-identical for a seed and matches its scores") {
  const auto dir = cli::fresh_dir("gen");
  REQUIRE(cli::run("gen-corpus --songs 1 --seed 3 --out " + (dir / "a").string(), dir).code == 0);
  REQUIRE(cli::run("gen-corpus --songs 1 --seed 3 --out " + (dir / "b").string(), dir).code == 0);
  CHECK(fs::exists(dir / "a" / "song_000.wav"));
  CHECK(fs::exists(dir / "a" / "song_000.json"));
  CHECK(cli::tree_digest(dir / "a") == cli::tree_digest(dir / "b"));

  const app::RunConfig cfg;
  const auto table = condition::PhonemeTable::load(dir / "a" / "phonemes.json");
  const auto score = condition::load_score(dir / "a" / "song_000.json", table);
  const auto grid = condition::expand_score(score, cfg.hop_size, cfg.sample_rate);
  const auto audio = signal::read_wav(dir / "a" / "song_000.wav");
  CHECK(static_cast<int>(cfg.stft().num_frames(audio.size())) == grid.frames());

  // Every sung note's tracked median sits within 2% of its MIDI frequency.
  const auto track = signal::estimate_f0(audio, cfg.stft(), app::pitch_config(cfg));
  int notes = 0;
  for (const auto& n : grid.notes) {
    if (!n.midi) continue;
    std::vector<double> f;
    for (int i = n.start; i < n.start + n.frames; ++i) {
      if (track.voiced[i]) f.push_back(track.f0[i]);
    }
    REQUIRE(!f.empty());
    std::nth_element(f.begin(), f.begin() + f.size() / 2, f.end());
    const double expect = 440.0 * std::pow(2.0, (*n.midi - 69) / 12.0);
    CHECK(std::abs(f[f.size() / 2] - expect) / expect < 0.02);
    ++notes;
  }
  CHECK(notes > 0);
}

TEST_CASE("usage and config errors map to exit codes 1 and 2") {
  const auto dir = cli::fresh_dir("usage");
  CHECK(cli::run("", dir).code == 1);
  CHECK(cli::run("no-such-command", dir).code == 1);
  CHECK(cli::run("gen-corpus", dir).code == 1);
  cli::write_text(dir / "bad.json", R"({"loss": {"recon": 1.0, "bogus": 2}})");
  const auto r = cli::run("gen-corpus --config " + (dir / "bad.json").string() + " --out " + (dir / "c").string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("loss.bogus") != std::string::npos);
  cli::write_text(dir / "neg.json", R"({"tau": -1})");
  CHECK(cli::run("gen-corpus --config " + (dir / "neg.json").string() + " --out " + (dir / "c").string(), dir).code == 2);
}

TEST_CASE("train-codec logs total = recon when every other weight is zero") {
  auto& f = fixture();
  const auto dir = cli::fresh_dir("recon_only");
  auto j = nlohmann::json::parse(kTiny);
  j["loss"] = {{"recon", 1.0}, {"emb", 0.0}, {"fm", 0.0}, {"lyrics", 0.0}, {"note", 0.0}};
  cli::write_text(dir / "c.json", j.dump());
  REQUIRE(cli::run("train-codec --config " + (dir / "c.json").string() + " --corpus " + f.corpus.string() +
                       " --out " + (dir / "k").string(), dir).code == 0);
  const auto log = app::read_csv(dir / "k" / "train_log.csv");
  REQUIRE(log.rows.size() == 6);
  const auto total = log.series("total");
  const auto recon = log.series("recon");
  for (std::size_t i = 0; i < total.size(); ++i) CHECK(total[i] == recon[i]);
}

TEST_CASE("train-codec resume reproduces the uninterrupted run bit for bit") {
  auto& f = fixture();
  const auto dir = cli::fresh_dir("resume");
  const std::string base = f.cfg() + "--corpus " + f.corpus.string() + " --out ";
  REQUIRE(cli::run("train-codec " + base + (dir / "straight").string(), dir).code == 0);
  REQUIRE(cli::run("train-codec " + base + (dir / "split").string() + " --steps 3", dir).code == 0);
  REQUIRE(cli::run("train-codec " + base + (dir / "split").string() + " --steps 6 --resume", dir).code == 0);
  for (const char* file : {"weights.f32", "codebooks.f32", "ema.f32", "optim.f32", "train_log.csv"}) {
    INFO(file);
    CHECK(cli::slurp(dir / "straight" / file) == cli::slurp(dir / "split" / file));
  }
}

TEST_CASE("codec encode/decode matches the direct forward pass and truncation costs latent accuracy") {
  auto& f = fixture();
  const auto dir = cli::fresh_dir("codec");
  const auto wav = f.corpus / "song_000.wav";
  const auto hsc = dir / "song.hsc";
  REQUIRE(cli::run("codec encode --codec " + f.codec.string() + " --in " + wav.string() + " --out " + hsc.string(), dir).code == 0);
  REQUIRE(cli::run("codec decode --codec " + f.codec.string() + " --in " + hsc.string() + " --out " + (dir / "full.f32").string(), dir).code == 0);
  REQUIRE(cli::run("codec decode --codec " + f.codec.string() + " --in " + hsc.string() + " --quantizers 1 --out " +
                       (dir / "one.f32").string(), dir).code == 0);
  REQUIRE(cli::run("codec encode --codec " + f.codec.string() + " --in " + wav.string() + " --out " + (dir / "again.hsc").string(), dir).code == 0);
  CHECK(cli::slurp(hsc) == cli::slurp(dir / "again.hsc"));

  const auto model = app::CodecModel::load(f.codec);
  const Matrix gt = app::log_mel(signal::read_wav(wav), model.cfg);
  Matrix direct = model.reconstruct(gt);
  io::round_to_f32(direct);
  const Matrix full = io::read_matrix(dir / "full.f32", "frames", "mel_bins");
  const Matrix one = io::read_matrix(dir / "one.f32", "frames", "mel_bins");
  REQUIRE(full.rows() == gt.rows());
  CHECK((full - direct).cwiseAbs().maxCoeff() <= 1e-7);
  // The decoder of a 6-step codec is not yet monotone in the latent, so the
  // accuracy cost is measured where the coder guarantees it.
  const auto codes = model.encode_codes(gt, -1);
  Matrix direct_one = model.decode_codes(rvq::truncate(codes, 1));
  io::round_to_f32(direct_one);
  CHECK((one - direct_one).cwiseAbs().maxCoeff() <= 1e-7);
  const Matrix z = model.encode_latent(gt);
  CHECK(rvq::mean_distortion(model.coder, z, 1) >= rvq::mean_distortion(model.coder, z));

  auto bytes = cli::slurp(hsc);
  bytes[0] = 'X';
  cli::write_text(dir / "bad.hsc", bytes);
  const auto r = cli::run("codec decode --codec " + f.codec.string() + " --in " + (dir / "bad.hsc").string() +
                              " --out " + (dir / "x.f32").string(), dir);
  CHECK(r.code == 2);
}

TEST_CASE("train-latent keeps the codec frozen and logs the right columns") {
  auto& f = fixture();
  const auto dir = cli::fresh_dir("latent");
  const auto before = cli::tree_digest(f.codec);
  const std::string common = "train-latent " + f.cfg() + "--corpus " + f.corpus.string();
  const std::string base = common + " --codec " + f.codec.string();

  const auto sup = app::read_csv(f.latent / "train_log.csv");
  CHECK(sup.column("l_cont_lyrics") < 0);
  CHECK(sup.column("l_cont_melody") < 0);
  CHECK(sup.column("l_diff") >= 0);
  CHECK(sup.column("l_prior") >= 0);

  REQUIRE(cli::run(base + " --unlabeled-ratio 0.5 --out " + (dir / "mixed").string(), dir).code == 0);
  const auto mixed = app::read_csv(dir / "mixed" / "train_log.csv");
  CHECK(mixed.column("l_cont_lyrics") >= 0);
  const auto sup_norm = mixed.series("grad_norm_supervised");
  const auto unsup_norm = mixed.series("grad_norm_unsupervised");
  CHECK(*std::max_element(sup_norm.begin(), sup_norm.end()) > 0.0);
  CHECK(*std::max_element(unsup_norm.begin(), unsup_norm.end()) > 0.0);

  CHECK(cli::tree_digest(f.codec) == before);
  CHECK(cli::run(common + " --out " + (dir / "x").string() + " --codec " + (dir / "missing").string(), dir).code == 2);
}

TEST_CASE("sample is deterministic, sized by the score and reports the noise temperature") {
  auto& f = fixture();
  const auto dir = cli::fresh_dir("sample");
  const auto score = f.corpus / "song_001.json";
  const std::string base = "sample " + f.cfg() + "--score " + score.string() + " --codec " + f.codec.string() +
                           " --latent " + f.latent.string() + " --seed 4 ";
  REQUIRE(cli::run(base + "--out " + (dir / "a").string(), dir).code == 0);
  REQUIRE(cli::run(base + "--out " + (dir / "b").string(), dir).code == 0);
  REQUIRE(cli::run(base + "--tau 1 --out " + (dir / "c").string(), dir).code == 0);
  CHECK(cli::slurp(dir / "a" / "latent.f32") == cli::slurp(dir / "b" / "latent.f32"));

  const auto cfg = tiny_config();
  const auto table = condition::PhonemeTable::load(f.corpus / "phonemes.json");
  const auto grid = condition::expand_score(condition::load_score(score, table), cfg.hop_size, cfg.sample_rate);
  const Matrix mel = io::read_matrix(dir / "a" / "mel.f32", "frames", "mel_bins");
  CHECK(mel.rows() == grid.frames());
  CHECK(mel.allFinite());

  const auto ra = cli::read_json(dir / "a" / "report.json");
  const auto rc = cli::read_json(dir / "c" / "report.json");
  CHECK(rc["init_noise_variance"].get<double>() / ra["init_noise_variance"].get<double>() == doctest::Approx(1.5));

  cli::write_text(dir / "small.json", R"({"max_frames": 10})");
  const auto r = cli::run("sample --config " + (dir / "small.json").string() + " --score " + score.string() +
                              " --codec " + f.codec.string() + " --latent " + f.latent.string() + " --out " +
                              (dir / "d").string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("max_frames") != std::string::npos);
}

TEST_CASE("evaluate reports exactly five fields and the trivial cases") {
  auto& f = fixture();
  const auto dir = cli::fresh_dir("evaluate");
  const auto wav = f.corpus / "song_000.wav";
  REQUIRE(cli::run("evaluate " + wav.string() + " " + wav.string() + " --out " + (dir / "self.json").string(), dir).code == 0);
  const auto self = cli::read_json(dir / "self.json");
  CHECK(self.size() == 5);
  CHECK(self["mae"] == 0.0);
  CHECK(self["pitch_cents_rmse"] == 0.0);
  CHECK(self["periodicity_rmse"] == 0.0);
  CHECK(self["vuv_f1"] == 1.0);

  auto octave = cli::read_json(f.corpus / "song_000.f0.json");
  for (auto& v : octave["f0"]) v = v.get<double>() * 2.0;
  cli::write_text(dir / "octave.json", octave.dump());
  REQUIRE(cli::run("evaluate " + wav.string() + " " + wav.string() + " --gt-pitch " + (f.corpus / "song_000.f0.json").string() +
                       " --pred-pitch " + (dir / "octave.json").string() + " --out " + (dir / "oct.json").string(), dir).code == 0);
  CHECK(cli::read_json(dir / "oct.json")["pitch_cents_rmse"].get<double>() == doctest::Approx(1200.0).epsilon(1e-12));

  const auto r = cli::run("evaluate " + wav.string() + " " + (f.corpus / "song_001.wav").string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("alignment") != std::string::npos);
}

TEST_CASE("selfcheck names the Gaussian suite when the drift sign is flipped") {
  const auto dir = cli::fresh_dir("selfcheck");
  const auto ok = cli::run("selfcheck --suite gaussian-sampler --suite ctc", dir);
  CHECK(ok.code == 0);
  const auto bad = cli::run("selfcheck --suite gaussian-sampler --inject-drift-flip", dir);
  CHECK(bad.code != 0);
  CHECK(bad.out.find("gaussian-sampler  FAIL") != std::string::npos);
  CHECK(cli::run("selfcheck --suite nope", dir).code == 2);
}
