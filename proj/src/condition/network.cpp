#include "cantus/condition/network.hpp"

#include "cantus/error.hpp"
#include "cantus/neural/ops.hpp"
#include "cantus/rng.hpp"

namespace cantus::condition {

ConditionNet::ConditionNet(const ConditionConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.alphabet < 1 || cfg.emb_dim < 1 || cfg.hidden < 1 || cfg.latent_dim < 1 || cfg.blocks < 0 ||
      cfg.feature_dim < 1 || cfg.f0_bins < 2) {
    throw ValidationError("condition network sizes must be positive");
  }
  auto rng = make_rng(seed, 0xc0d1);
  phoneme_ = nn::Embedding(cfg.alphabet, cfg.emb_dim, rng);
  pitch_ = nn::Embedding(kPitchTokens, cfg.emb_dim, rng);
  duration_ = nn::Embedding(kDurationTokens, cfg.emb_dim, rng);
  tempo_ = nn::Embedding(kTempoTokens, cfg.emb_dim, rng);
  f0_ = nn::Embedding(cfg.f0_bins + 1, cfg.emb_dim, rng);
  f0_.table.mutable_value().row(0).setZero();
  lyrics_proj_ = nn::Linear(cfg.emb_dim, cfg.hidden, rng);
  melody_proj_ = nn::Linear(cfg.emb_dim, cfg.hidden, rng);
  lyrics_u_proj_ = nn::Linear(cfg.feature_dim, cfg.hidden, rng);
  melody_u_proj_ = nn::Linear(cfg.emb_dim, cfg.hidden, rng);
  for (int b = 0; b < cfg.blocks; ++b) {
    blocks_.push_back({nn::Conv1d3(cfg.hidden, cfg.hidden, rng), nn::Linear(cfg.hidden, cfg.hidden, rng)});
  }
  prior_ = nn::Linear(cfg.hidden, cfg.latent_dim, rng);
}

FrameCondition ConditionNet::build(const FrameGrid& grid) const {
  if (grid.frames() < 1) throw ValidationError("empty frame grid");
  const Tensor h_lyrics = nn::tanh(lyrics_proj_(phoneme_(grid.phoneme)));
  const Tensor melody = nn::add(nn::add(pitch_(grid.pitch), duration_(grid.duration)), tempo_(grid.tempo));
  const Tensor h_melody = nn::tanh(melody_proj_(melody));
  return combine(h_lyrics, h_melody);
}

FrameCondition ConditionNet::build_unsupervised(const Tensor& features, std::span<const int> f0_index) const {
  if (features.rows() != static_cast<Eigen::Index>(f0_index.size())) {
    throw ValidationError("feature frames (" + std::to_string(features.rows()) + ") and F0 frames (" +
                          std::to_string(f0_index.size()) + ") differ");
  }
  if (features.rows() < 1) throw ValidationError("empty feature sequence");
  const Tensor h_lyrics = nn::tanh(lyrics_u_proj_(features));
  const Tensor h_melody = nn::tanh(melody_u_proj_(f0_(f0_index)));
  return combine(h_lyrics, h_melody);
}

FrameCondition ConditionNet::combine(const Tensor& h_lyrics, const Tensor& h_melody) const {
  Tensor x = nn::add(h_lyrics, h_melody);
  if (cfg_.enhanced) {
    for (const auto& b : blocks_) x = nn::add(x, b.proj(nn::tanh(b.conv(x))));
  }
  return {h_lyrics, h_melody, x, prior_(x)};
}

void ConditionNet::collect(const std::string& prefix, nn::ParamList& out) const {
  phoneme_.collect(prefix + "phoneme.", out);
  pitch_.collect(prefix + "pitch.", out);
  duration_.collect(prefix + "duration.", out);
  tempo_.collect(prefix + "tempo.", out);
  f0_.collect(prefix + "f0.", out);
  lyrics_proj_.collect(prefix + "lyrics.", out);
  melody_proj_.collect(prefix + "melody.", out);
  lyrics_u_proj_.collect(prefix + "lyrics_u.", out);
  melody_u_proj_.collect(prefix + "melody_u.", out);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    blocks_[b].conv.collect(prefix + "block" + std::to_string(b) + ".conv.", out);
    blocks_[b].proj.collect(prefix + "block" + std::to_string(b) + ".proj.", out);
  }
  prior_.collect(prefix + "prior.", out);
}

}  // namespace cantus::condition
