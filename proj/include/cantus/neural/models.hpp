#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cantus/neural/layers.hpp"

namespace cantus::nn {

struct ScoreNetConfig {
  int latent_dim = 16;
  int cond_dim = 64;
  int width = 64;
  int blocks = 4;
  int time_dim = 64;
  /// When set, the network predicts the standardized noise and the score is
  /// -raw / noise_std(t). When empty the raw output is the score.
  std::function<double(double)> noise_std;
};

/// Gated residual denoiser: s(z_t, mu_hat, h_cond, t) -> frames x D.
class ScoreNet : public Module {
 public:
  ScoreNet() = default;
  ScoreNet(ScoreNetConfig cfg, std::uint64_t seed);

  Tensor operator()(const Tensor& z_t, const Tensor& mu_hat, const Tensor& h_cond, double t) const;
  /// Same network with an explicit time embedding row (1 x time_dim).
  Tensor forward_embedded(const Tensor& z_t, const Tensor& mu_hat, const Tensor& h_cond,
                          const Tensor& t_emb, double t) const;
  void collect(const std::string& prefix, ParamList& out) const override;
  const ScoreNetConfig& config() const { return cfg_; }

 private:
  struct Block {
    Linear time_proj;
    Conv1d3 conv;
    Linear cond;
    Linear out;
  };
  ScoreNetConfig cfg_;
  Linear in_proj_;
  Linear time_fc1_;
  Linear time_fc2_;
  std::vector<Block> blocks_;
  Linear out_fc1_;
  Linear out_fc2_;
};

struct AutoencoderConfig {
  int mel_bins = 128;
  int width = 64;
  int latent_dim = 16;
  double input_scale = 0.25;
};

/// Log-mel frames -> continuous latent z0.
class Encoder : public Module {
 public:
  Encoder() = default;
  Encoder(const AutoencoderConfig& cfg, std::uint64_t seed);
  Tensor operator()(const Tensor& log_mel) const;
  void collect(const std::string& prefix, ParamList& out) const override;

 private:
  double input_scale_ = 1.0;
  Conv1d3 conv1_;
  Conv1d3 conv2_;
  Linear proj_;
};

/// Quantized latent -> log-mel frames.
class Decoder : public Module {
 public:
  Decoder() = default;
  Decoder(const AutoencoderConfig& cfg, std::uint64_t seed);
  Tensor operator()(const Tensor& z) const;
  void collect(const std::string& prefix, ParamList& out) const override;

 private:
  Linear in_;
  Conv1d3 conv1_;
  Conv1d3 conv2_;
  Linear out_;
};

/// Frame classifier producing log-probabilities (for CTC heads).
class LogSoftmaxHead : public Module {
 public:
  LogSoftmaxHead() = default;
  LogSoftmaxHead(int in, int classes, std::uint64_t seed);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const override;

 private:
  Linear proj_;
};

struct DiscriminatorOutput {
  Tensor scores;                 // frames x 1
  std::vector<Tensor> features;  // intermediate activations
};

/// Small convolutional critic over log-mel patches.
class Discriminator : public Module {
 public:
  Discriminator() = default;
  Discriminator(int mel_bins, int width, std::uint64_t seed, double input_scale = 0.25);
  DiscriminatorOutput operator()(const Tensor& log_mel) const;
  void collect(const std::string& prefix, ParamList& out) const override;

 private:
  double input_scale_ = 1.0;
  Conv1d3 conv1_;
  Conv1d3 conv2_;
  Linear out_;
};

}  // namespace cantus::nn
