#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cantus/diffusion/diffusion.hpp"
#include "cantus/losses/losses.hpp"
#include "cantus/signal/types.hpp"

namespace cantus::app {

enum class LatentTarget { z0, zq };
enum class PriorKind { data, standard };

/// Every tunable of every command. Loaded from JSON with either nested objects
/// or dotted keys ("loss.recon"); unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;

  // Signal front end
  int sample_rate = 24000;
  int fft_size = 2048;
  int win_size = 2048;
  int hop_size = 256;
  int mel_bins = 128;
  double fmin = 0.0;
  double fmax = 12000.0;
  double mel_floor = 1e-2;
  double f0_fmin = 50.0;
  double f0_fmax = 2100.0;
  double voicing_threshold = 0.5;

  // Codec
  int latent_dim = 16;
  int width = 64;
  int quantizers = 8;
  int codebook_size = 64;
  double ema_decay = 0.99;
  double dead_threshold = 2.0;
  int reseed_interval = 100;
  int codec_window = 128;
  int codec_train_steps = 2000;
  double codec_lr = 2e-3;
  bool adversarial = false;
  int disc_width = 32;

  // Latent generator
  int blocks = 4;
  int time_dim = 64;
  int cond_hidden = 64;
  int cond_emb = 64;
  int cond_blocks = 2;
  int feature_dim = 32;
  int f0_bins = 128;
  int latent_window = 64;
  int latent_batch = 2;
  int latent_train_steps = 5000;
  double latent_lr = 1e-3;
  double unlabeled_ratio = 0.0;
  LatentTarget target = LatentTarget::z0;
  PriorKind prior = PriorKind::data;
  bool enhanced_ce = true;

  // Optimizer
  double beta1 = 0.8;
  double beta2 = 0.99;
  double weight_decay = 0.01;

  // Diffusion
  diffusion::NoiseSchedule schedule;
  int steps = 100;  // sampler steps
  double tau = 1.5;
  double t_min = 1e-3;
  int max_frames = 4096;

  losses::LossWeights loss;
  double tau_cont = 0.1;
  int n_neg = 10;

  int log_every = 1;
  int checkpoint_every = 0;  // 0 = only at the end

  signal::StftConfig stft() const { return {fft_size, win_size, hop_size}; }
  void validate() const;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

std::string to_string(LatentTarget t);
std::string to_string(PriorKind p);
LatentTarget parse_target(const std::string& s);
PriorKind parse_prior(const std::string& s);

}  // namespace cantus::app
