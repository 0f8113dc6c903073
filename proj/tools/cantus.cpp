#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "cantus/app/codec.hpp"
#include "cantus/app/config.hpp"
#include "cantus/app/corpus.hpp"
#include "cantus/app/evaluate.hpp"
#include "cantus/app/latent.hpp"
#include "cantus/app/selfcheck.hpp"
#include "cantus/error.hpp"

namespace fs = std::filesystem;
using namespace cantus;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<double> tau;
  std::optional<double> unlabeled_ratio;
  std::optional<std::string> target;
  std::optional<std::string> prior;
  bool no_enhanced_ce = false;
};

void add_config(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run config");
  cmd->add_option("--seed", c.seed, "random seed");
}

app::RunConfig load(const Common& c) {
  app::RunConfig cfg = c.config.empty() ? app::RunConfig{} : app::RunConfig::load(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.tau) cfg.tau = *c.tau;
  if (c.unlabeled_ratio) cfg.unlabeled_ratio = *c.unlabeled_ratio;
  if (c.target) cfg.target = app::parse_target(*c.target);
  if (c.prior) cfg.prior = app::parse_prior(*c.prior);
  if (c.no_enhanced_ce) cfg.enhanced_ce = false;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"cantus: singing-voice codec and latent diffusion toolkit"};
  cli.require_subcommand(1);
  Common c;
  fs::path out, corpus, codec_dir, latent_dir, input, score;
  int n_songs = 3;
  int quantizers = -1;
  bool resume = false;
  bool project = false;
  bool flip = false;
  std::optional<fs::path> gt_pitch, pred_pitch;
  fs::path gt, pred;

  auto* gen = cli.add_subcommand("gen-corpus", "write a synthetic tone corpus");
  add_config(gen, c);
  gen->add_option("--songs", n_songs, "number of songs")->check(CLI::PositiveNumber);
  gen->add_option("--out", out, "output directory")->required();

  auto* tc = cli.add_subcommand("train-codec", "train encoder, quantizer and decoder");
  add_config(tc, c);
  tc->add_option("--steps", c.steps, "training steps (total, including resumed ones)");
  tc->add_option("--corpus", corpus)->required();
  tc->add_option("--out", out, "checkpoint directory")->required();
  tc->add_flag("--resume", resume, "continue from the checkpoint in --out");

  auto* codec = cli.add_subcommand("codec", "encode audio to a bitstream or decode it to mel");
  codec->require_subcommand(1);
  auto* enc = codec->add_subcommand("encode", "WAV -> HSC1 bitstream");
  auto* dec = codec->add_subcommand("decode", "HSC1 bitstream -> log-mel .f32");
  for (auto* s : {enc, dec}) {
    s->add_option("--codec", codec_dir)->required();
    s->add_option("--in", input)->required();
    s->add_option("--out", out)->required();
    s->add_option("--quantizers", quantizers, "use only the first N quantizers");
  }

  auto* tl = cli.add_subcommand("train-latent", "train condition and score networks on frozen codec latents");
  add_config(tl, c);
  tl->add_option("--steps", c.steps, "training steps");
  tl->add_option("--corpus", corpus)->required();
  tl->add_option("--codec", codec_dir)->required();
  tl->add_option("--out", out)->required();
  tl->add_option("--unlabeled-ratio", c.unlabeled_ratio, "fraction of songs with the score withheld");
  tl->add_option("--target", c.target, "z0|zq");
  tl->add_option("--prior", c.prior, "data|standard");
  tl->add_flag("--no-enhanced-ce", c.no_enhanced_ce, "bypass the residual condition stack");

  auto* sm = cli.add_subcommand("sample", "generate latents and mel from a musical score");
  add_config(sm, c);
  sm->add_option("--steps", c.steps, "sampler steps");
  sm->add_option("--tau", c.tau, "prior temperature");
  sm->add_option("--score", score)->required();
  sm->add_option("--codec", codec_dir)->required();
  sm->add_option("--latent", latent_dir)->required();
  sm->add_option("--out", out)->required();
  sm->add_flag("--project", project, "project sampled latents onto RVQ codes before decoding");

  auto* ev = cli.add_subcommand("evaluate", "compare two recordings or mel files");
  add_config(ev, c);
  ev->add_option("gt", gt, "ground truth .wav or .f32")->required();
  ev->add_option("pred", pred, "prediction .wav or .f32")->required();
  ev->add_option("--gt-pitch", gt_pitch, "pitch JSON overriding the tracked ground truth");
  ev->add_option("--pred-pitch", pred_pitch, "pitch JSON overriding the tracked prediction");
  ev->add_option("--out", out, "report path (stdout when omitted)");

  auto* sc = cli.add_subcommand("selfcheck", "run the numerical self-check suites");
  sc->add_flag("--inject-drift-flip", flip, "negate the sampler drift (the Gaussian suite must fail)");
  std::vector<std::string> suites;
  sc->add_option("--suite", suites, "run only the named suite (repeatable)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      const auto cfg = load(c);
      app::generate_corpus(out, n_songs, cfg.seed, cfg);
    } else if (*tc) {
      auto cfg = load(c);
      if (c.steps) cfg.codec_train_steps = *c.steps;
      std::cout << app::train_codec(cfg, {corpus, out, resume}).to_json().dump(2) << '\n';
    } else if (*enc) {
      app::cmd_codec_encode(codec_dir, input, out, quantizers);
    } else if (*dec) {
      app::cmd_codec_decode(codec_dir, input, out, quantizers);
    } else if (*tl) {
      auto cfg = load(c);
      if (c.steps) cfg.latent_train_steps = *c.steps;
      std::cout << app::train_latent(cfg, {corpus, codec_dir, out}).to_json().dump(2) << '\n';
    } else if (*sm) {
      auto cfg = load(c);
      if (c.steps) cfg.steps = *c.steps;
      cfg.validate();
      const auto report = app::sample(cfg, {score, codec_dir, latent_dir, out, project});
      std::cout << "frames " << report["frames"] << ", notes within 100 cents "
                << report["notes_within_100_cents"] << '\n';
    } else if (*ev) {
      const auto cfg = load(c);
      app::EvaluateOptions opt{gt, pred, gt_pitch, pred_pitch, std::nullopt};
      if (!out.empty()) opt.out = out;
      const auto report = app::evaluate_files(cfg, opt);
      if (out.empty()) std::cout << report.to_json().dump(2) << '\n';
    } else if (*sc) {
      bool ok = true;
      for (const auto& r : app::run_selfcheck({flip, suites})) {
        std::printf("%-17s %s  %.1fs  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.seconds,
                    r.detail.c_str());
        ok = ok && r.passed;
      }
      if (!ok) {
        std::cerr << "selfcheck failed\n";
        return 3;
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
