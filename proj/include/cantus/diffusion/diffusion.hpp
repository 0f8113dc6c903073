#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "cantus/neural/ops.hpp"
#include "cantus/types.hpp"

namespace cantus::diffusion {

using nn::Tensor;

/// beta_t = beta0 + (betaT - beta0) t / T on [0, T].
struct NoiseSchedule {
  double beta0 = 0.05;
  double betaT = 20.0;
  double T = 1.0;

  void validate() const;
  double beta(double t) const;
  /// Closed-form integral of beta over [t0, t1].
  double integral(double t0, double t1) const;
  /// Variance of the transition density, 1 - exp(-int_0^t beta).
  double lambda(double t) const;
  /// Weight on z'_0 in the transition mean, exp(-int_0^t beta / 2).
  double data_weight(double t) const;
};

struct TransitionParams {
  Matrix rho;
  double lambda = 0.0;
};

/// rho_t = (1 - w) mu_hat + w z'_0 with w = data_weight(t); lambda_t.
TransitionParams transition(const NoiseSchedule& s, const Matrix& z0, const Matrix& mu_hat, double t);
/// Differentiable transition mean.
Tensor transition_mean(const NoiseSchedule& s, const Tensor& z0, const Tensor& mu_hat, double t);

struct ForwardSample {
  Matrix z_t;
  Matrix target;  // -(z_t - rho_t) / lambda_t
  Matrix rho;
  double lambda = 0.0;
};
/// z_t = rho_t + sqrt(lambda_t) eps with eps standard normal.
ForwardSample forward_sample(const NoiseSchedule& s, const Matrix& z0, const Matrix& mu_hat, double t,
                             const Matrix& eps);

using ScoreFn = std::function<Matrix(const Matrix& z, const Matrix& mu_hat, const Matrix& h_cond, double t)>;
using TensorScoreFn =
    std::function<Tensor(const Tensor& z, const Tensor& mu_hat, const Tensor& h_cond, double t)>;

struct DiffusionItem {
  Tensor z0;      // normalized target latent, frames x D
  Tensor mu_hat;  // frames x D
  Tensor h_cond;  // frames x H
};

/// lambda_t * mean over frames of |s(z_t) - target|^2 for one item at a given
/// t and noise draw. Gradients reach mu_hat through z_t and the net input.
Tensor diffusion_loss_at(const TensorScoreFn& score, const DiffusionItem& item, const NoiseSchedule& s, double t,
                         const Matrix& eps);

struct DiffusionLoss {
  Tensor loss;  // batch mean
  std::vector<double> t;
  std::vector<double> per_item;
};
/// Draws t ~ U(t_min, T) and eps per item from an element RNG split off `rng`.
DiffusionLoss diffusion_loss(const TensorScoreFn& score, std::span<const DiffusionItem> batch,
                             const NoiseSchedule& s, double t_min, std::mt19937_64& rng);

/// mean(0.5 (z0 - mu_hat)^2) + 0.5 ln(2 pi)
Tensor prior_loss(const Tensor& z0, const Tensor& mu_hat);

struct SamplerConfig {
  int steps = 100;
  double tau = 1.5;
  std::uint64_t seed = 0;
  /// Test hook: negate the drift term. A correct sampler must fail the
  /// Gaussian oracle when this is set.
  bool flip_drift_sign = false;
  void validate() const;
};

struct SampleResult {
  Matrix z;
  double init_noise_variance = 0.0;            // 1 / tau
  double init_noise_empirical_variance = 0.0;  // of the actual draw
};

/// Euler-Maruyama on the reverse SDE from z ~ N(mu_hat, I / tau), with the
/// noise omitted on the final step.
SampleResult reverse_sample(const ScoreFn& score, const Matrix& mu_hat, const Matrix& h_cond,
                            const NoiseSchedule& s, const SamplerConfig& cfg);

struct LatentStats {
  RowVector mean;
  RowVector std;
  static LatentStats compute(const Matrix& z, double min_std = 1e-5);
  void validate() const;
  void save(const std::filesystem::path& path) const;
  static LatentStats load(const std::filesystem::path& path);
};

Matrix normalize_latent(const Matrix& z, const LatentStats& st);
Matrix denormalize_latent(const Matrix& z, const LatentStats& st);

}  // namespace cantus::diffusion
