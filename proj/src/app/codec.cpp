#include "cantus/app/codec.hpp"

#include <random>

#include "cantus/app/log.hpp"
#include "cantus/error.hpp"
#include "cantus/io.hpp"
#include "cantus/losses/losses.hpp"
#include "cantus/neural/checkpoint.hpp"
#include "cantus/neural/ops.hpp"
#include "cantus/neural/optim.hpp"
#include "cantus/rng.hpp"
#include "cantus/signal/wav.hpp"

namespace cantus::app {

namespace fs = std::filesystem;
using nlohmann::json;
using nn::Tensor;

namespace {

nn::AutoencoderConfig autoencoder_config(const RunConfig& c) {
  return {c.mel_bins, c.width, c.latent_dim, 0.25};
}

rvq::RvqConfig rvq_config(const RunConfig& c) {
  rvq::RvqConfig r;
  r.quantizers = c.quantizers;
  r.entries = c.codebook_size;
  r.dim = c.latent_dim;
  r.decay = c.ema_decay;
  r.dead_threshold = c.dead_threshold;
  r.reseed_interval = c.reseed_interval;
  return r;
}

std::vector<int> merge_repeats(std::vector<int> labels) {
  std::vector<int> out;
  for (int l : labels) {
    if (out.empty() || out.back() != l) out.push_back(l);
  }
  return out;
}

std::vector<int> fit_window(std::vector<int> labels, int count) {
  if (losses::ctc_min_frames(labels) > count) labels = merge_repeats(labels);
  while (!labels.empty() && losses::ctc_min_frames(labels) > count) labels.pop_back();
  return labels;
}

Matrix rows(const Matrix& m, int start, int count) { return m.middleRows(start, count); }

}  // namespace

std::vector<int> ctc_labels(const std::vector<int>& ids, int start, int count) {
  std::vector<int> labels;
  int prev = -1;
  for (int f = start; f < start + count; ++f) {
    if (ids[f] != prev && ids[f] != 0) labels.push_back(ids[f]);
    prev = ids[f];
  }
  return fit_window(labels, count);
}

std::vector<int> ctc_note_labels(const condition::FrameGrid& grid, int start, int count) {
  std::vector<int> labels;
  for (const auto& n : grid.notes) {
    if (!n.midi || n.start + n.frames <= start || n.start >= start + count) continue;
    labels.push_back(*n.midi + 1);
  }
  return fit_window(labels, count);
}

CodecModel::CodecModel(const RunConfig& c, int alphabet_size) : cfg(c), alphabet(alphabet_size) {
  cfg.validate();
  if (alphabet < 2) throw ValidationError("phoneme alphabet needs at least one non-rest symbol");
  const auto ae = autoencoder_config(cfg);
  encoder = nn::Encoder(ae, cfg.seed);
  decoder = nn::Decoder(ae, cfg.seed);
  lyrics_head = nn::LogSoftmaxHead(cfg.latent_dim, alphabet, cfg.seed);
  note_head = nn::LogSoftmaxHead(cfg.latent_dim, condition::kPitchTokens, cfg.seed + 1);
  if (cfg.adversarial) critic = nn::Discriminator(cfg.mel_bins, cfg.disc_width, cfg.seed);
  // Placeholder codebooks until training initializes them from data.
  std::vector<Matrix> books(cfg.quantizers, Matrix::Zero(cfg.codebook_size, cfg.latent_dim));
  coder = rvq::make_coder(books, true);
  coder.config = rvq_config(cfg);
}

nn::ParamList CodecModel::generator_params() const {
  nn::ParamList p;
  encoder.collect("encoder.", p);
  decoder.collect("decoder.", p);
  lyrics_head.collect("lyrics_head.", p);
  note_head.collect("note_head.", p);
  return p;
}

nn::ParamList CodecModel::critic_params() const {
  nn::ParamList p;
  if (critic) critic->collect("critic.", p);
  return p;
}

Matrix CodecModel::encode_latent(const Matrix& log_mel) const {
  if (log_mel.cols() != cfg.mel_bins) throw ValidationError("log-mel width does not match the codec");
  return encoder(Tensor::constant(log_mel)).value();
}

Matrix CodecModel::decode_latent(const Matrix& z) const {
  if (z.cols() != cfg.latent_dim) throw ValidationError("latent width does not match the codec");
  return decoder(Tensor::constant(z)).value();
}

rvq::CodecCodes CodecModel::encode_codes(const Matrix& log_mel, int quantizers) const {
  return rvq::encode(coder, encode_latent(log_mel), quantizers);
}

Matrix CodecModel::decode_codes(const rvq::CodecCodes& codes) const {
  if (codes.K != coder.K() || codes.D != coder.D() || codes.C > coder.C()) {
    throw ValidationError("codes (C=" + std::to_string(codes.C) + ", K=" + std::to_string(codes.K) + ", D=" +
                          std::to_string(codes.D) + ") do not fit this codec (C=" + std::to_string(coder.C()) +
                          ", K=" + std::to_string(coder.K()) + ", D=" + std::to_string(coder.D()) + ")");
  }
  return decode_latent(rvq::decode(coder, codes));
}

Matrix CodecModel::project(const Matrix& z, int quantizers) const {
  return rvq::decode(coder, rvq::encode(coder, z, quantizers));
}

Matrix CodecModel::reconstruct(const Matrix& log_mel, int quantizers) const {
  return decode_codes(encode_codes(log_mel, quantizers));
}

void CodecModel::save(const fs::path& dir) const {
  ensure_dir(dir);
  io::write_json(dir / "codec.json", {{"config", cfg.to_json()}, {"alphabet", alphabet}});
  nn::ParamList all = generator_params();
  for (auto& p : critic_params()) all.push_back(p);
  nn::save_checkpoint(dir / "weights.f32", all);
  rvq::save_codebooks(dir / "codebooks.f32", coder);
}

CodecModel CodecModel::load(const fs::path& dir) {
  if (!fs::exists(dir / "codec.json")) throw IoError("no codec checkpoint in " + dir.string());
  const auto j = io::read_json(dir / "codec.json");
  CodecModel m(RunConfig::from_json(j.at("config")), j.at("alphabet").get<int>());
  nn::ParamList all = m.generator_params();
  for (auto& p : m.critic_params()) all.push_back(p);
  nn::load_checkpoint(dir / "weights.f32", all);
  auto coder = rvq::load_codebooks(dir / "codebooks.f32");
  if (coder.C() != m.cfg.quantizers || coder.K() != m.cfg.codebook_size || coder.D() != m.cfg.latent_dim) {
    throw ValidationError("codebooks do not match codec.json");
  }
  coder.config = m.coder.config;
  m.coder = std::move(coder);
  return m;
}

double corpus_recon_l1(const CodecModel& m, const Corpus& corpus, int quantizers) {
  double total = 0.0;
  double count = 0.0;
  for (const auto& s : corpus.songs) {
    total += (m.reconstruct(s.log_mel, quantizers) - s.log_mel).cwiseAbs().sum();
    count += static_cast<double>(s.log_mel.size());
  }
  return total / count;
}

json CodecTrainSummary::to_json() const {
  return {{"steps", steps}, {"recon_l1_initial", recon_l1_initial}, {"recon_l1_final", recon_l1_final}};
}

namespace {

void check_signal_match(const RunConfig& a, const RunConfig& b) {
  if (a.sample_rate != b.sample_rate || a.fft_size != b.fft_size || a.win_size != b.win_size ||
      a.hop_size != b.hop_size || a.mel_bins != b.mel_bins || a.fmin != b.fmin || a.fmax != b.fmax ||
      a.mel_floor != b.mel_floor || a.latent_dim != b.latent_dim || a.width != b.width ||
      a.quantizers != b.quantizers || a.codebook_size != b.codebook_size || a.adversarial != b.adversarial ||
      a.disc_width != b.disc_width) {
    throw ValidationError("config differs from the checkpoint in signal or codec shape settings; cannot resume");
  }
}

Matrix stack_latents(const CodecModel& m, const Corpus& corpus) {
  std::vector<Matrix> parts;
  Eigen::Index total = 0;
  for (const auto& s : corpus.songs) {
    parts.push_back(m.encode_latent(s.log_mel));
    total += parts.back().rows();
  }
  Matrix z(total, m.cfg.latent_dim);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    z.middleRows(at, p.rows()) = p;
    at += p.rows();
  }
  return z;
}

const std::vector<std::string> kCodecColumns = {"step", "total", "adv",  "recon", "emb",       "fm",
                                                "lyrics", "note", "critic", "grad_norm", "lr"};

}  // namespace

CodecTrainSummary train_codec(const RunConfig& cfg, const CodecTrainOptions& opt) {
  cfg.validate();
  const Corpus corpus = load_corpus(opt.corpus, cfg);
  ensure_dir(opt.out);

  CodecModel m(cfg, corpus.table.size());
  const auto gen = m.generator_params();
  const auto crit = m.critic_params();
  nn::AdamW g_opt(gen, {cfg.codec_lr, cfg.beta1, cfg.beta2, cfg.weight_decay, 1e-8});
  std::optional<nn::AdamW> c_opt;
  if (m.critic) c_opt.emplace(crit, nn::AdamWConfig{cfg.codec_lr, cfg.beta1, cfg.beta2, cfg.weight_decay, 1e-8});

  CodecTrainSummary summary;
  long start = 0;
  const bool resuming = opt.resume && fs::exists(opt.out / "codec.json");
  if (resuming) {
    const auto j = io::read_json(opt.out / "codec.json");
    check_signal_match(RunConfig::from_json(j.at("config")), cfg);
    nn::ParamList all = gen;
    for (auto& p : crit) all.push_back(p);
    const auto meta = nn::load_checkpoint(opt.out / "weights.f32", all);
    start = meta.at("step").get<long>();
    summary.recon_l1_initial = meta.at("recon_l1_initial").get<double>();
    auto coder = rvq::load_codebooks(opt.out / "codebooks.f32");
    coder.config = m.coder.config;
    rvq::load_ema_state(opt.out / "ema.f32", coder);
    m.coder = std::move(coder);
    nn::ParamList state = g_opt.state();
    if (c_opt) {
      for (auto& [name, t] : c_opt->state()) state.emplace_back("critic/" + name, t);
    }
    nn::load_checkpoint(opt.out / "optim.f32", state);
    g_opt.set_step_count(start);
    if (c_opt) c_opt->set_step_count(start);
    truncate_csv(opt.out / "train_log.csv", start);
  } else {
    nn::round_to_f32(gen);
    nn::round_to_f32(crit);
    m.coder = rvq::init_codebooks(m.coder.config, stack_latents(m, corpus), cfg.seed);
    rvq::round_to_f32(m.coder);
    summary.recon_l1_initial = corpus_recon_l1(m, corpus);
  }

  auto checkpoint = [&](long step) {
    m.save(opt.out);
    nn::ParamList all = gen;
    for (auto& p : crit) all.push_back(p);
    nn::save_checkpoint(opt.out / "weights.f32", all,
                        {{"step", step}, {"recon_l1_initial", summary.recon_l1_initial}});
    rvq::save_ema_state(opt.out / "ema.f32", m.coder);
    nn::ParamList state = g_opt.state();
    if (c_opt) {
      for (auto& [name, t] : c_opt->state()) state.emplace_back("critic/" + name, t);
    }
    nn::save_checkpoint(opt.out / "optim.f32", state, {{"step", step}});
  };

  CsvLog log(opt.out / "train_log.csv", kCodecColumns, resuming);
  const auto& w = cfg.loss;
  for (long step = start; step < cfg.codec_train_steps; ++step) {
    try {
      auto rng = make_rng(cfg.seed, 0xc0dec, static_cast<std::uint64_t>(step));
      const auto& song = corpus.songs[std::uniform_int_distribution<std::size_t>(0, corpus.songs.size() - 1)(rng)];
      const int count = std::min(cfg.codec_window, song.frames());
      const int at = std::uniform_int_distribution<int>(0, song.frames() - count)(rng);

      const Tensor x = Tensor::constant(rows(song.log_mel, at, count));
      const Tensor z = m.encoder(x);
      const auto st = rvq::quantize_st(m.coder, z);
      const Tensor x_hat = m.decoder(st.quantized);

      const auto lyric_target = ctc_labels(song.grid.phoneme, at, count);
      const auto note_target = ctc_note_labels(song.grid, at, count);
      auto ctc = [](const Tensor& lp, const std::vector<int>& target) {
        if (target.empty()) return Tensor::scalar(0.0);
        return nn::scale(losses::ctc_loss(lp, target), 1.0 / static_cast<double>(target.size()));
      };

      losses::GeneratorParts<Tensor> parts{Tensor::scalar(0.0), losses::recon_l1(x, x_hat), st.commitment,
                                           Tensor::scalar(0.0), ctc(m.lyrics_head(st.quantized), lyric_target),
                                           ctc(m.note_head(st.quantized), note_target)};
      double critic_loss = 0.0;
      if (m.critic) {
        const auto real = (*m.critic)(x);
        const auto fake_detached = (*m.critic)(x_hat.detach());
        const Tensor d_loss = losses::lsgan_d(real.scores, fake_detached.scores);
        critic_loss = d_loss.item();
        c_opt->zero_grad();
        d_loss.backward();
        c_opt->step();
        nn::round_to_f32(crit);
        nn::round_to_f32(c_opt->state());

        const auto fake = (*m.critic)(x_hat);
        const auto real_now = (*m.critic)(x);
        std::vector<Tensor> real_feats;
        for (const auto& f : real_now.features) real_feats.push_back(f.detach());
        parts.adv = losses::lsgan_g(fake.scores);
        parts.fm = losses::feature_matching(real_feats, fake.features);
      }
      const Tensor total = losses::generator_total(parts, w);

      g_opt.zero_grad();
      total.backward();
      const double gnorm = nn::grad_norm(gen);
      g_opt.step();
      nn::round_to_f32(gen);
      nn::round_to_f32(g_opt.state());
      if (c_opt) c_opt->zero_grad();

      auto ema_rng = make_rng(cfg.seed, 0xe3a, static_cast<std::uint64_t>(step));
      rvq::ema_update(m.coder, z.value(), ema_rng);
      rvq::round_to_f32(m.coder);

      if (step % cfg.log_every == 0 || step + 1 == cfg.codec_train_steps) {
        log.row({static_cast<double>(step), total.item(), parts.adv.item(), parts.recon.item(), parts.emb.item(),
                 parts.fm.item(), parts.lyrics.item(), parts.note.item(), critic_loss, gnorm, cfg.codec_lr});
      }
    } catch (const NumericalError& e) {
      throw NumericalError("codec training diverged at step " + std::to_string(step) + ": " + e.what());
    }
    if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0) checkpoint(step + 1);
  }

  const long done = std::max<long>(start, cfg.codec_train_steps);
  checkpoint(done);
  summary.steps = done;
  summary.recon_l1_final = corpus_recon_l1(m, corpus);
  io::write_json(opt.out / "summary.json", summary.to_json());
  return summary;
}

void cmd_codec_encode(const fs::path& codec_dir, const fs::path& wav, const fs::path& out, int quantizers) {
  const auto m = CodecModel::load(codec_dir);
  const auto audio = signal::read_wav(wav);
  if (audio.sample_rate != m.cfg.sample_rate) {
    throw ValidationError("audio is " + std::to_string(audio.sample_rate) + " Hz, codec expects " +
                          std::to_string(m.cfg.sample_rate));
  }
  if (quantizers > m.coder.C()) throw ValidationError("codec has only " + std::to_string(m.coder.C()) + " quantizers");
  rvq::Bitstream b;
  b.codes = m.encode_codes(log_mel(audio, m.cfg), quantizers);
  b.sample_rate = static_cast<std::uint32_t>(m.cfg.sample_rate);
  b.hop = static_cast<std::uint32_t>(m.cfg.hop_size);
  rvq::write_bitstream(out, b);
}

void cmd_codec_decode(const fs::path& codec_dir, const fs::path& bitstream, const fs::path& out, int quantizers) {
  const auto m = CodecModel::load(codec_dir);
  auto b = rvq::read_bitstream(bitstream);
  if (b.sample_rate != static_cast<std::uint32_t>(m.cfg.sample_rate) ||
      b.hop != static_cast<std::uint32_t>(m.cfg.hop_size)) {
    throw ValidationError("bitstream sample rate or hop does not match the codec");
  }
  if (quantizers > 0) b.codes = rvq::truncate(b.codes, quantizers);
  io::write_matrix(out, m.decode_codes(b.codes), "frames", "mel_bins",
                   {{"sample_rate", m.cfg.sample_rate}, {"hop_size", m.cfg.hop_size}});
}

}  // namespace cantus::app
