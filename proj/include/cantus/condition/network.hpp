#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cantus/condition/score.hpp"
#include "cantus/neural/layers.hpp"

namespace cantus::condition {

using nn::Tensor;

struct ConditionConfig {
  int alphabet = 16;
  int emb_dim = 64;
  int hidden = 64;  // H
  int latent_dim = 16;
  int blocks = 2;
  int feature_dim = 32;  // F of the unsupervised lyrics features
  int f0_bins = 128;
  bool enhanced = true;  // residual stack over the summed encoders
};

struct FrameCondition {
  Tensor h_lyrics;  // frames x H
  Tensor h_melody;
  Tensor h_cond;
  Tensor mu_hat;  // frames x D
};

/// Lyrics and melody encoders, their unsupervised counterparts, the residual
/// condition stack and the single-layer prior estimator.
class ConditionNet : public nn::Module {
 public:
  ConditionNet() = default;
  ConditionNet(const ConditionConfig& cfg, std::uint64_t seed);

  /// Score path: tanh(Linear(phoneme emb)) and tanh(Linear(pitch + duration + tempo emb)).
  FrameCondition build(const FrameGrid& grid) const;
  /// Unlabeled path: tanh(Linear(features)) and tanh(Linear(f0 emb)), f0 index 0 = unvoiced.
  FrameCondition build_unsupervised(const Tensor& features, std::span<const int> f0_index) const;
  /// Residual stack and prior estimator on given encoder outputs.
  FrameCondition combine(const Tensor& h_lyrics, const Tensor& h_melody) const;

  void collect(const std::string& prefix, nn::ParamList& out) const override;
  const ConditionConfig& config() const { return cfg_; }
  void set_enhanced(bool on) { cfg_.enhanced = on; }

 private:
  struct Block {
    nn::Conv1d3 conv;
    nn::Linear proj;
  };
  ConditionConfig cfg_;
  nn::Embedding phoneme_, pitch_, duration_, tempo_, f0_;
  nn::Linear lyrics_proj_, melody_proj_, lyrics_u_proj_, melody_u_proj_;
  std::vector<Block> blocks_;
  nn::Linear prior_;
};

}  // namespace cantus::condition
