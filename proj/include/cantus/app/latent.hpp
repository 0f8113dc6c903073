#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "cantus/app/codec.hpp"
#include "cantus/app/config.hpp"
#include "cantus/condition/network.hpp"
#include "cantus/diffusion/diffusion.hpp"
#include "cantus/neural/models.hpp"

namespace cantus::app {

/// Condition network, score network and latent normalization.
struct LatentModel {
  RunConfig cfg;
  condition::PhonemeTable table;
  condition::ConditionNet cond;
  nn::ScoreNet score;
  diffusion::LatentStats stats;

  LatentModel(const RunConfig& cfg, condition::PhonemeTable table);

  nn::ParamList parameters() const;
  /// Prior mean fed to both the sampler and the network input.
  Matrix prior_mean(const condition::FrameCondition& c) const;
  nn::Tensor prior_mean_tensor(const condition::FrameCondition& c) const;

  void save(const std::filesystem::path& dir) const;
  static LatentModel load(const std::filesystem::path& dir);
};

/// Fixed random projection of log-mel frames standing in for self-supervised
/// lyrics features of unlabeled recordings.
Matrix unlabeled_features(const Matrix& log_mel, int feature_dim);

struct LatentTrainOptions {
  std::filesystem::path corpus;
  std::filesystem::path codec;
  std::filesystem::path out;
};

struct LatentTrainSummary {
  long steps = 0;
  int ma_window = 100;
  double l_diff_initial_ma = 0.0;  // mean of the first window
  double l_diff_final_ma = 0.0;    // mean of the last window
  double l_diff_eval = 0.0;        // whole songs, 16 stratified fixed (t, eps) draws each
  std::vector<std::string> unlabeled;
  nlohmann::json to_json() const;
};

LatentTrainSummary train_latent(const RunConfig& cfg, const LatentTrainOptions& opt);

struct SampleOptions {
  std::filesystem::path score;
  std::filesystem::path codec;
  std::filesystem::path latent;
  std::filesystem::path out;
  bool project_codes = false;  // force the RVQ projection even for z0 models
};

/// Writes latent.f32, mel.f32, f0.json and report.json to opt.out and
/// returns the report. cfg supplies seed, steps, tau and max_frames.
nlohmann::json sample(const RunConfig& cfg, const SampleOptions& opt);

}  // namespace cantus::app
