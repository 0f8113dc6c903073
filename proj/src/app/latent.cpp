#include "cantus/app/latent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cantus/app/log.hpp"
#include "cantus/error.hpp"
#include "cantus/io.hpp"
#include "cantus/losses/losses.hpp"
#include "cantus/neural/checkpoint.hpp"
#include "cantus/neural/ops.hpp"
#include "cantus/neural/optim.hpp"
#include "cantus/rng.hpp"
#include "cantus/signal/pitch.hpp"
#include "cantus/signal/pitch_io.hpp"

namespace cantus::app {

namespace fs = std::filesystem;
using nlohmann::json;
using nn::Tensor;

namespace {

condition::ConditionConfig condition_config(const RunConfig& c, int alphabet) {
  return {alphabet, c.cond_emb, c.cond_hidden, c.latent_dim, c.cond_blocks, c.feature_dim, c.f0_bins, c.enhanced_ce};
}

nn::ScoreNetConfig score_config(const RunConfig& c) {
  const auto schedule = c.schedule;
  return {c.latent_dim, c.cond_hidden, c.width, c.blocks, c.time_dim,
          [schedule](double t) { return std::sqrt(schedule.lambda(t)); }};
}

condition::FrameGrid slice_grid(const condition::FrameGrid& g, int start, int count) {
  auto cut = [&](const std::vector<int>& v) { return std::vector<int>(v.begin() + start, v.begin() + start + count); };
  condition::FrameGrid w;
  w.phoneme = cut(g.phoneme);
  w.pitch = cut(g.pitch);
  w.duration = cut(g.duration);
  w.tempo = cut(g.tempo);
  return w;
}

double norm_of(const nn::ParamList& params, const std::vector<std::string>& prefixes) {
  double s = 0.0;
  for (const auto& [name, p] : params) {
    const bool match = std::any_of(prefixes.begin(), prefixes.end(),
                                   [&](const std::string& pre) { return name.rfind(pre, 0) == 0; });
    if (match && p.has_grad()) s += p.grad().squaredNorm();
  }
  return std::sqrt(s);
}

// Copies the codec-owned settings so features and latents match the codec.
RunConfig adopt_codec(RunConfig cfg, const RunConfig& codec) {
  cfg.sample_rate = codec.sample_rate;
  cfg.fft_size = codec.fft_size;
  cfg.win_size = codec.win_size;
  cfg.hop_size = codec.hop_size;
  cfg.mel_bins = codec.mel_bins;
  cfg.fmin = codec.fmin;
  cfg.fmax = codec.fmax;
  cfg.mel_floor = codec.mel_floor;
  cfg.latent_dim = codec.latent_dim;
  return cfg;
}

double mean_of(const std::vector<double>& v, std::size_t from, std::size_t to) {
  if (to <= from) return 0.0;
  return std::accumulate(v.begin() + static_cast<long>(from), v.begin() + static_cast<long>(to), 0.0) /
         static_cast<double>(to - from);
}

}  // namespace

LatentModel::LatentModel(const RunConfig& c, condition::PhonemeTable t)
    : cfg(c),
      table(std::move(t)),
      cond(condition_config(c, table.size()), c.seed),
      score(score_config(c), c.seed) {
  cfg.validate();
  stats.mean = RowVector::Zero(cfg.latent_dim);
  stats.std = RowVector::Ones(cfg.latent_dim);
}

nn::ParamList LatentModel::parameters() const {
  nn::ParamList p;
  cond.collect("cond.", p);
  score.collect("score.", p);
  return p;
}

Matrix LatentModel::prior_mean(const condition::FrameCondition& c) const {
  if (cfg.prior == PriorKind::standard) return Matrix::Zero(c.h_cond.rows(), cfg.latent_dim);
  return c.mu_hat.value();
}

Tensor LatentModel::prior_mean_tensor(const condition::FrameCondition& c) const {
  if (cfg.prior == PriorKind::standard) return Tensor::constant(Matrix::Zero(c.h_cond.rows(), cfg.latent_dim));
  return c.mu_hat;
}

void LatentModel::save(const fs::path& dir) const {
  ensure_dir(dir);
  io::write_json(dir / "latent.json", {{"config", cfg.to_json()}, {"phonemes", table.to_json()}});
  nn::save_checkpoint(dir / "weights.f32", parameters());
  stats.save(dir / "stats.f32");
}

LatentModel LatentModel::load(const fs::path& dir) {
  if (!fs::exists(dir / "latent.json")) throw IoError("no latent checkpoint in " + dir.string());
  const auto j = io::read_json(dir / "latent.json");
  LatentModel m(RunConfig::from_json(j.at("config")), condition::PhonemeTable::from_json(j.at("phonemes")));
  nn::load_checkpoint(dir / "weights.f32", m.parameters());
  m.stats = diffusion::LatentStats::load(dir / "stats.f32");
  if (m.stats.mean.size() != m.cfg.latent_dim) throw ValidationError("latent stats do not match the model width");
  return m;
}

Matrix unlabeled_features(const Matrix& log_mel, int feature_dim) {
  auto rng = make_rng(0x55f, 0xfea7, static_cast<std::uint64_t>(log_mel.cols()));
  std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(log_mel.cols())));
  Matrix p(log_mel.cols(), feature_dim);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = g(rng);
  return log_mel * p;
}

json LatentTrainSummary::to_json() const {
  return {{"steps", steps},
          {"ma_window", ma_window},
          {"l_diff_initial_ma", l_diff_initial_ma},
          {"l_diff_final_ma", l_diff_final_ma},
          {"l_diff_eval", l_diff_eval},
          {"unlabeled", unlabeled}};
}

LatentTrainSummary train_latent(const RunConfig& user_cfg, const LatentTrainOptions& opt) {
  user_cfg.validate();
  if (fs::weakly_canonical(opt.out) == fs::weakly_canonical(opt.codec)) {
    throw ValidationError("latent output directory must differ from the codec directory");
  }
  const CodecModel codec = CodecModel::load(opt.codec);
  const RunConfig cfg = adopt_codec(user_cfg, codec.cfg);
  const Corpus corpus = load_corpus(opt.corpus, cfg);
  if (corpus.table.size() != codec.alphabet) throw ValidationError("corpus phoneme table does not match the codec");

  LatentModel m(cfg, corpus.table);
  const auto params = m.parameters();
  nn::round_to_f32(params);

  const std::size_t n = corpus.songs.size();
  std::vector<Matrix> targets;
  std::vector<Matrix> features;
  std::vector<std::vector<int>> f0_index;
  Eigen::Index total_frames = 0;
  for (const auto& s : corpus.songs) {
    Matrix z = codec.encode_latent(s.log_mel);
    if (cfg.target == LatentTarget::zq) z = codec.project(z);
    targets.push_back(std::move(z));
    features.push_back(unlabeled_features(s.log_mel, cfg.feature_dim));
    f0_index.push_back(signal::quantize_f0(s.f0, cfg.f0_bins));
    total_frames += s.frames();
  }
  Matrix all(total_frames, cfg.latent_dim);
  Eigen::Index at = 0;
  for (const auto& z : targets) {
    all.middleRows(at, z.rows()) = z;
    at += z.rows();
  }
  m.stats = diffusion::LatentStats::compute(all);
  m.stats.mean = m.stats.mean.unaryExpr([](double v) { return io::to_f32(v); });
  m.stats.std = m.stats.std.unaryExpr([](double v) { return io::to_f32(v); });
  for (auto& z : targets) z = diffusion::normalize_latent(z, m.stats);

  // A seeded subset of songs has its score withheld.
  std::vector<bool> unlabeled(n, false);
  LatentTrainSummary summary;
  {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(cfg.seed, 0x0171);
    std::shuffle(order.begin(), order.end(), rng);
    const auto count = static_cast<std::size_t>(std::lround(cfg.unlabeled_ratio * static_cast<double>(n)));
    for (std::size_t i = 0; i < count; ++i) unlabeled[order[i]] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (unlabeled[i]) summary.unlabeled.push_back(corpus.songs[i].name);
    }
  }
  const bool mixed = cfg.unlabeled_ratio > 0.0;

  ensure_dir(opt.out);
  std::vector<std::string> columns = {"step", "total", "l_diff", "l_diff_ma", "l_prior"};
  if (mixed) {
    columns.push_back("l_cont_lyrics");
    columns.push_back("l_cont_melody");
  }
  for (const char* c : {"grad_norm_score", "grad_norm_cond", "grad_norm_supervised", "grad_norm_unsupervised"}) {
    columns.push_back(c);
  }
  CsvLog log(opt.out / "train_log.csv", columns, false);

  nn::AdamW adam(params, {cfg.latent_lr, cfg.beta1, cfg.beta2, cfg.weight_decay, 1e-8});
  const diffusion::TensorScoreFn score_fn = [&m](const Tensor& z, const Tensor& mu, const Tensor& h, double t) {
    return m.score(z, mu, h, t);
  };
  const std::vector<std::string> supervised = {"cond.phoneme.", "cond.pitch.", "cond.duration.",
                                               "cond.tempo.",   "cond.lyrics.", "cond.melody."};
  const std::vector<std::string> unsupervised = {"cond.f0.", "cond.lyrics_u.", "cond.melody_u."};
  const bool data_prior = cfg.prior == PriorKind::data;

  std::vector<double> history;
  const int window = summary.ma_window;
  for (long step = 0; step < cfg.latent_train_steps; ++step) {
    try {
      auto rng = make_rng(cfg.seed, 0x1a7e, static_cast<std::uint64_t>(step));
      std::vector<diffusion::DiffusionItem> items;
      std::vector<Tensor> priors, cont_lyrics, cont_melody;
      for (int b = 0; b < cfg.latent_batch; ++b) {
        const std::size_t idx = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        const auto& song = corpus.songs[idx];
        const int count = std::min(cfg.latent_window, song.frames());
        const int start = std::uniform_int_distribution<int>(0, song.frames() - count)(rng);
        const std::span<const int> f0(f0_index[idx].data() + start, static_cast<std::size_t>(count));
        const Tensor feats = Tensor::constant(features[idx].middleRows(start, count));

        condition::FrameCondition c;
        if (unlabeled[idx]) {
          c = m.cond.build_unsupervised(feats, f0);
        } else {
          c = m.cond.build(slice_grid(song.grid, start, count));
          if (mixed) {
            const auto u = m.cond.build_unsupervised(feats, f0);
            const auto negs = losses::sample_negatives(count, cfg.n_neg, rng);
            cont_lyrics.push_back(losses::contrastive_loss(c.h_lyrics, u.h_lyrics, cfg.tau_cont, negs));
            cont_melody.push_back(losses::contrastive_loss(c.h_melody, u.h_melody, cfg.tau_cont, negs));
          }
        }
        const Tensor z0 = Tensor::constant(targets[idx].middleRows(start, count));
        const Tensor mu = m.prior_mean_tensor(c);
        if (data_prior) priors.push_back(diffusion::prior_loss(z0, mu));
        items.push_back({z0, mu, c.h_cond});
      }
      const auto diff = diffusion::diffusion_loss(score_fn, items, cfg.schedule, cfg.t_min, rng);

      auto batch_mean = [](const std::vector<Tensor>& v) {
        if (v.empty()) return Tensor::scalar(0.0);
        Tensor s = v.front();
        for (std::size_t i = 1; i < v.size(); ++i) s = nn::add(s, v[i]);
        return nn::scale(s, 1.0 / static_cast<double>(v.size()));
      };
      const Tensor l_prior = batch_mean(priors);
      std::vector<Tensor> contrastive;
      if (mixed) {
        contrastive.push_back(batch_mean(cont_lyrics));
        contrastive.push_back(batch_mean(cont_melody));
      }
      const Tensor total = losses::latent_generator_total<Tensor>(diff.loss, l_prior, cfg.loss.prior, contrastive);

      adam.zero_grad();
      total.backward();
      const double g_score = norm_of(params, {"score."});
      const double g_cond = norm_of(params, {"cond."});
      const double g_sup = norm_of(params, supervised);
      const double g_unsup = norm_of(params, unsupervised);
      adam.step();
      nn::round_to_f32(params);

      history.push_back(diff.loss.item());
      const std::size_t h = history.size();
      const double ma = mean_of(history, h > static_cast<std::size_t>(window) ? h - window : 0, h);
      if (step % cfg.log_every == 0 || step + 1 == cfg.latent_train_steps) {
        std::vector<double> row = {static_cast<double>(step), total.item(), diff.loss.item(), ma, l_prior.item()};
        if (mixed) {
          row.push_back(contrastive[0].item());
          row.push_back(contrastive[1].item());
        }
        for (double g : {g_score, g_cond, g_sup, g_unsup}) row.push_back(g);
        log.row(row);
      }
    } catch (const NumericalError& e) {
      throw NumericalError("latent training diverged at step " + std::to_string(step) + ": " + e.what());
    }
  }

  // Held-out style evaluation with fixed draws shared by every run, so runs
  // that differ only in flags are compared on identical (t, eps) pairs.
  double eval_total = 0.0;
  int eval_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& song = corpus.songs[i];
    const auto c = unlabeled[i] ? m.cond.build_unsupervised(Tensor::constant(features[i]), f0_index[i])
                                : m.cond.build(song.grid);
    const Tensor z0 = Tensor::constant(targets[i]);
    const diffusion::DiffusionItem item{z0, Tensor::constant(m.prior_mean(c)), c.h_cond.detach()};
    for (int k = 0; k < 16; ++k) {
      auto er = make_rng(0xe7a1, i, static_cast<std::uint64_t>(k));
      const double t = cfg.t_min + (cfg.schedule.T - cfg.t_min) * (k + std::uniform_real_distribution<double>(0.0, 1.0)(er)) / 16.0;
      std::normal_distribution<double> g(0.0, 1.0);
      Matrix eps(z0.rows(), z0.cols());
      for (Eigen::Index e = 0; e < eps.size(); ++e) eps.data()[e] = g(er);
      eval_total += diffusion::diffusion_loss_at(score_fn, item, cfg.schedule, t, eps).item();
      ++eval_count;
    }
  }
  summary.l_diff_eval = eval_total / eval_count;

  m.save(opt.out);
  nn::save_checkpoint(opt.out / "optim.f32", adam.state(), {{"step", cfg.latent_train_steps}});
  const std::size_t h = history.size();
  const std::size_t w = std::min<std::size_t>(window, h);
  summary.steps = cfg.latent_train_steps;
  summary.l_diff_initial_ma = mean_of(history, 0, w);
  summary.l_diff_final_ma = mean_of(history, h - w, h);
  io::write_json(opt.out / "summary.json", summary.to_json());
  return summary;
}

json sample(const RunConfig& run, const SampleOptions& opt) {
  const CodecModel codec = CodecModel::load(opt.codec);
  const LatentModel m = LatentModel::load(opt.latent);
  if (m.cfg.latent_dim != codec.cfg.latent_dim || m.cfg.hop_size != codec.cfg.hop_size ||
      m.cfg.sample_rate != codec.cfg.sample_rate) {
    throw ValidationError("latent model and codec were built for different latent or frame settings");
  }
  const auto score = condition::load_score(opt.score, m.table);
  const auto grid = condition::expand_score(score, m.cfg.hop_size, m.cfg.sample_rate);
  if (grid.frames() > run.max_frames) {
    throw ValidationError("score expands to " + std::to_string(grid.frames()) + " frames, above max_frames " +
                          std::to_string(run.max_frames));
  }

  const auto c = m.cond.build(grid);
  const Matrix mu = m.prior_mean(c);
  const diffusion::ScoreFn score_fn = [&m](const Matrix& z, const Matrix& mu_hat, const Matrix& h, double t) {
    return m.score(Tensor::constant(z), Tensor::constant(mu_hat), Tensor::constant(h), t).value();
  };
  diffusion::SamplerConfig sc;
  sc.steps = run.steps;
  sc.tau = run.tau;
  sc.seed = run.seed;
  const auto res = diffusion::reverse_sample(score_fn, mu, c.h_cond.value(), m.cfg.schedule, sc);

  Matrix z = diffusion::denormalize_latent(res.z, m.stats);
  const bool projected = opt.project_codes || m.cfg.target == LatentTarget::zq;
  if (projected) z = codec.project(z);
  const Matrix mel = codec.decode_latent(z);
  const auto f0 = f0_from_log_mel(mel, codec.cfg);

  ensure_dir(opt.out);
  io::write_matrix(opt.out / "latent.f32", z, "frames", "D");
  io::write_matrix(opt.out / "mel.f32", mel, "frames", "mel_bins",
                   {{"sample_rate", codec.cfg.sample_rate}, {"hop_size", codec.cfg.hop_size}});
  signal::write_pitch_track(opt.out / "f0.json", f0);

  json notes = json::array();
  int sung = 0, within = 0;
  for (const auto& n : grid.notes) {
    if (!n.midi) continue;
    ++sung;
    std::vector<double> voiced;
    for (int f = n.start; f < n.start + n.frames; ++f) {
      if (f0.voiced[f]) voiced.push_back(f0.f0[f]);
    }
    json o = {{"start", n.start}, {"frames", n.frames}, {"midi", *n.midi}};
    if (voiced.empty()) {
      o["median_f0_hz"] = nullptr;
      o["cents_error"] = nullptr;
    } else {
      std::nth_element(voiced.begin(), voiced.begin() + static_cast<long>(voiced.size() / 2), voiced.end());
      const double med = voiced[voiced.size() / 2];
      const double cents = 1200.0 * std::log2(med / signal::midi_to_hz(*n.midi));
      o["median_f0_hz"] = med;
      o["cents_error"] = cents;
      if (std::abs(cents) <= 100.0) ++within;
    }
    notes.push_back(o);
  }
  json report = {{"frames", grid.frames()},
                 {"steps", run.steps},
                 {"tau", run.tau},
                 {"seed", run.seed},
                 {"target", to_string(m.cfg.target)},
                 {"prior", to_string(m.cfg.prior)},
                 {"projected", projected},
                 {"init_noise_variance", res.init_noise_variance},
                 {"init_noise_empirical_variance", res.init_noise_empirical_variance},
                 {"notes", notes},
                 {"notes_within_100_cents", sung ? static_cast<double>(within) / sung : 0.0}};
  io::write_json(opt.out / "report.json", report);
  return report;
}

}  // namespace cantus::app
