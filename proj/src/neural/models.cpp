#include "cantus/neural/models.hpp"

#include <array>
#include <cmath>
#include <string>

#include "cantus/error.hpp"
#include "cantus/rng.hpp"

namespace cantus::nn {

namespace {

void check_frames(const char* what, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw ValidationError(std::string(what) + ": frame counts differ (" + std::to_string(a.rows()) +
                          " vs " + std::to_string(b.rows()) + ")");
  }
}

}  // namespace

ScoreNet::ScoreNet(ScoreNetConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  if (cfg_.latent_dim < 1 || cfg_.cond_dim < 1 || cfg_.width < 1 || cfg_.blocks < 1) {
    throw ValidationError("score net sizes must be positive");
  }
  auto rng = make_rng(seed, 0x5c0e);
  const int w = cfg_.width;
  in_proj_ = Linear(2 * cfg_.latent_dim, w, rng);
  time_fc1_ = Linear(cfg_.time_dim, w, rng);
  time_fc2_ = Linear(w, w, rng);
  for (int r = 0; r < cfg_.blocks; ++r) {
    blocks_.push_back(Block{Linear(w, w, rng), Conv1d3(w, 2 * w, rng), Linear(cfg_.cond_dim, 2 * w, rng),
                            Linear(w, 2 * w, rng)});
  }
  out_fc1_ = Linear(w, w, rng);
  out_fc2_ = Linear(w, cfg_.latent_dim, rng);
}

Tensor ScoreNet::operator()(const Tensor& z_t, const Tensor& mu_hat, const Tensor& h_cond,
                            double t) const {
  return forward_embedded(z_t, mu_hat, h_cond, Tensor::constant(sinusoidal_embedding(t, cfg_.time_dim)), t);
}

Tensor ScoreNet::forward_embedded(const Tensor& z_t, const Tensor& mu_hat, const Tensor& h_cond,
                                  const Tensor& t_emb, double t) const {
  check_frames("score net (z_t, mu_hat)", z_t, mu_hat);
  check_frames("score net (z_t, h_cond)", z_t, h_cond);
  if (z_t.cols() != cfg_.latent_dim || mu_hat.cols() != cfg_.latent_dim) {
    throw ValidationError("score net latent dim mismatch");
  }
  const int w = cfg_.width;
  const std::array<Tensor, 2> inputs{z_t, mu_hat};
  Tensor x = in_proj_(concat_cols(inputs));
  const Tensor temb = time_fc2_(silu(time_fc1_(t_emb)));
  Tensor skip;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (const auto& b : blocks_) {
    const Tensor y = add(x, b.time_proj(temb));
    const Tensor a = add(b.conv(y), b.cond(h_cond));
    const Tensor o = b.out(gated(a));
    x = scale(add(x, slice_cols(o, 0, w)), inv_sqrt2);
    const Tensor s = slice_cols(o, w, w);
    skip = skip.defined() ? add(skip, s) : s;
  }
  skip = scale(skip, 1.0 / std::sqrt(static_cast<double>(blocks_.size())));
  Tensor raw = out_fc2_(silu(out_fc1_(silu(skip))));
  if (cfg_.noise_std) {
    const double sd = cfg_.noise_std(t);
    if (!(sd > 0.0)) throw NumericalError("score net noise std is not positive at t=" + std::to_string(t));
    raw = scale(raw, -1.0 / sd);
  }
  return raw;
}

void ScoreNet::collect(const std::string& prefix, ParamList& out) const {
  in_proj_.collect(prefix + "in_proj.", out);
  time_fc1_.collect(prefix + "time_fc1.", out);
  time_fc2_.collect(prefix + "time_fc2.", out);
  for (std::size_t r = 0; r < blocks_.size(); ++r) {
    const std::string p = prefix + "block" + std::to_string(r) + ".";
    blocks_[r].time_proj.collect(p + "time_proj.", out);
    blocks_[r].conv.collect(p + "conv.", out);
    blocks_[r].cond.collect(p + "cond.", out);
    blocks_[r].out.collect(p + "out.", out);
  }
  out_fc1_.collect(prefix + "out_fc1.", out);
  out_fc2_.collect(prefix + "out_fc2.", out);
}

Encoder::Encoder(const AutoencoderConfig& cfg, std::uint64_t seed) : input_scale_(cfg.input_scale) {
  auto rng = make_rng(seed, 0xe4c0);
  conv1_ = Conv1d3(cfg.mel_bins, cfg.width, rng);
  conv2_ = Conv1d3(cfg.width, cfg.width, rng);
  proj_ = Linear(cfg.width, cfg.latent_dim, rng);
}

Tensor Encoder::operator()(const Tensor& log_mel) const {
  const Tensor h = silu(conv1_(scale(log_mel, input_scale_)));
  return proj_(silu(conv2_(h)));
}

void Encoder::collect(const std::string& prefix, ParamList& out) const {
  conv1_.collect(prefix + "conv1.", out);
  conv2_.collect(prefix + "conv2.", out);
  proj_.collect(prefix + "proj.", out);
}

Decoder::Decoder(const AutoencoderConfig& cfg, std::uint64_t seed) {
  auto rng = make_rng(seed, 0xdec0);
  in_ = Linear(cfg.latent_dim, cfg.width, rng);
  conv1_ = Conv1d3(cfg.width, cfg.width, rng);
  conv2_ = Conv1d3(cfg.width, cfg.width, rng);
  out_ = Linear(cfg.width, cfg.mel_bins, rng);
}

Tensor Decoder::operator()(const Tensor& z) const {
  const Tensor h = silu(conv1_(in_(z)));
  return out_(silu(conv2_(h)));
}

void Decoder::collect(const std::string& prefix, ParamList& out) const {
  in_.collect(prefix + "in.", out);
  conv1_.collect(prefix + "conv1.", out);
  conv2_.collect(prefix + "conv2.", out);
  out_.collect(prefix + "out.", out);
}

LogSoftmaxHead::LogSoftmaxHead(int in, int classes, std::uint64_t seed) {
  auto rng = make_rng(seed, 0x4ead);
  proj_ = Linear(in, classes, rng);
}

Tensor LogSoftmaxHead::operator()(const Tensor& x) const { return log_softmax(proj_(x)); }

void LogSoftmaxHead::collect(const std::string& prefix, ParamList& out) const {
  proj_.collect(prefix + "proj.", out);
}

Discriminator::Discriminator(int mel_bins, int width, std::uint64_t seed, double input_scale)
    : input_scale_(input_scale) {
  auto rng = make_rng(seed, 0xd15c);
  conv1_ = Conv1d3(mel_bins, width, rng);
  conv2_ = Conv1d3(width, width, rng);
  out_ = Linear(width, 1, rng);
}

DiscriminatorOutput Discriminator::operator()(const Tensor& log_mel) const {
  DiscriminatorOutput o;
  const Tensor h1 = silu(conv1_(scale(log_mel, input_scale_)));
  const Tensor h2 = silu(conv2_(h1));
  o.features = {h1, h2};
  o.scores = out_(h2);
  return o;
}

void Discriminator::collect(const std::string& prefix, ParamList& out) const {
  conv1_.collect(prefix + "conv1.", out);
  conv2_.collect(prefix + "conv2.", out);
  out_.collect(prefix + "out.", out);
}

}  // namespace cantus::nn
