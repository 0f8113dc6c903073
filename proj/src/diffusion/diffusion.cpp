#include "cantus/diffusion/diffusion.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cantus/error.hpp"
#include "cantus/io.hpp"
#include "cantus/rng.hpp"

namespace cantus::diffusion {

void NoiseSchedule::validate() const {
  if (!(beta0 > 0.0 && beta0 < betaT)) throw ValidationError("schedule needs 0 < beta0 < betaT");
  if (!(T > 0.0)) throw ValidationError("schedule horizon T must be positive");
}

namespace {

void check_time(const NoiseSchedule& s, double t) {
  if (!(t >= 0.0 && t <= s.T)) {
    throw ValidationError("t=" + std::to_string(t) + " outside [0, " + std::to_string(s.T) + "]");
  }
}

void check_same(const char* what, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(std::string(what) + ": shapes differ (" + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
  }
}

}  // namespace

double NoiseSchedule::beta(double t) const {
  check_time(*this, t);
  return beta0 + (betaT - beta0) * t / T;
}

double NoiseSchedule::integral(double t0, double t1) const {
  check_time(*this, t0);
  check_time(*this, t1);
  if (t0 > t1) throw ValidationError("integral needs t0 <= t1");
  const double dt = t1 - t0;
  return beta0 * dt + (betaT - beta0) * dt * (t1 + t0) / (2.0 * T);
}

double NoiseSchedule::lambda(double t) const { return -std::expm1(-integral(0.0, t)); }

double NoiseSchedule::data_weight(double t) const { return std::exp(-0.5 * integral(0.0, t)); }

TransitionParams transition(const NoiseSchedule& s, const Matrix& z0, const Matrix& mu_hat, double t) {
  check_same("transition", z0, mu_hat);
  const double w = s.data_weight(t);
  return {(1.0 - w) * mu_hat + w * z0, s.lambda(t)};
}

Tensor transition_mean(const NoiseSchedule& s, const Tensor& z0, const Tensor& mu_hat, double t) {
  check_same("transition", z0.value(), mu_hat.value());
  const double w = s.data_weight(t);
  return nn::add(nn::scale(mu_hat, 1.0 - w), nn::scale(z0, w));
}

ForwardSample forward_sample(const NoiseSchedule& s, const Matrix& z0, const Matrix& mu_hat, double t,
                             const Matrix& eps) {
  if (!(t > 0.0)) throw ValidationError("forward_sample needs t > 0 (lambda_0 = 0 makes the target singular)");
  check_same("forward_sample", z0, eps);
  auto tr = transition(s, z0, mu_hat, t);
  ForwardSample out;
  out.lambda = tr.lambda;
  out.z_t = tr.rho + std::sqrt(tr.lambda) * eps;
  out.target = -(out.z_t - tr.rho) / tr.lambda;
  out.rho = std::move(tr.rho);
  return out;
}

Tensor diffusion_loss_at(const TensorScoreFn& score, const DiffusionItem& item, const NoiseSchedule& s, double t,
                         const Matrix& eps) {
  if (!(t > 0.0)) throw ValidationError("diffusion loss needs t > 0");
  check_same("diffusion_loss", item.z0.value(), eps);
  const double lambda = s.lambda(t);
  const Tensor rho = transition_mean(s, item.z0, item.mu_hat, t);
  const Tensor z_t = nn::add(rho, Tensor::constant(std::sqrt(lambda) * eps));
  // -(z_t - rho) / lambda is exactly -eps / sqrt(lambda).
  const Tensor target = Tensor::constant(-eps / std::sqrt(lambda));
  const Tensor est = score(z_t, item.mu_hat, item.h_cond, t);
  check_same("diffusion_loss score output", est.value(), eps);
  const double frames = static_cast<double>(eps.rows());
  return nn::scale(nn::sum(nn::square(nn::sub(est, target))), lambda / frames);
}

DiffusionLoss diffusion_loss(const TensorScoreFn& score, std::span<const DiffusionItem> batch,
                             const NoiseSchedule& s, double t_min, std::mt19937_64& rng) {
  if (batch.empty()) throw ValidationError("diffusion loss needs a non-empty batch");
  if (!(t_min > 0.0 && t_min < s.T)) throw ValidationError("t_min must lie in (0, T)");
  const std::uint64_t base = rng();
  DiffusionLoss out;
  Tensor total;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto er = make_rng(base, 0xd1ff, i);
    std::uniform_real_distribution<double> ut(t_min, s.T);
    std::normal_distribution<double> n01(0.0, 1.0);
    const double t = ut(er);
    Matrix eps(batch[i].z0.rows(), batch[i].z0.cols());
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps.data()[k] = n01(er);
    const Tensor l = diffusion_loss_at(score, batch[i], s, t, eps);
    out.t.push_back(t);
    out.per_item.push_back(l.item());
    total = total.defined() ? nn::add(total, l) : l;
  }
  out.loss = nn::scale(total, 1.0 / static_cast<double>(batch.size()));
  return out;
}

Tensor prior_loss(const Tensor& z0, const Tensor& mu_hat) {
  check_same("prior_loss", z0.value(), mu_hat.value());
  const double c = 0.5 * std::log(2.0 * std::numbers::pi);
  return nn::add_scalar(nn::scale(nn::mean(nn::square(nn::sub(z0, mu_hat))), 0.5), c);
}

void SamplerConfig::validate() const {
  if (steps < 1) throw ValidationError("sampler steps must be >= 1");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("temperature tau must be positive and finite");
}

SampleResult reverse_sample(const ScoreFn& score, const Matrix& mu_hat, const Matrix& h_cond,
                            const NoiseSchedule& s, const SamplerConfig& cfg) {
  cfg.validate();
  s.validate();
  if (h_cond.rows() != mu_hat.rows()) throw ValidationError("reverse_sample: h_cond and mu_hat frames differ");
  auto rng = make_rng(cfg.seed, 0x5a3b);
  std::normal_distribution<double> n01(0.0, 1.0);
  SampleResult out;
  out.init_noise_variance = 1.0 / cfg.tau;
  const double sd = std::sqrt(out.init_noise_variance);
  Matrix noise(mu_hat.rows(), mu_hat.cols());
  for (Eigen::Index k = 0; k < noise.size(); ++k) noise.data()[k] = sd * n01(rng);
  if (noise.size() > 1) {
    const double m = noise.mean();
    out.init_noise_empirical_variance = (noise.array() - m).square().sum() / static_cast<double>(noise.size() - 1);
  }
  Matrix z = mu_hat + noise;

  const double h = s.T / cfg.steps;
  const double sign = cfg.flip_drift_sign ? -1.0 : 1.0;
  for (int i = 0; i < cfg.steps; ++i) {
    const double t = s.T * (1.0 - static_cast<double>(i) / cfg.steps);
    const Matrix sc = score(z, mu_hat, h_cond, t);
    if (sc.rows() != z.rows() || sc.cols() != z.cols()) {
      throw ValidationError("score output shape differs from the latent at step " + std::to_string(i));
    }
    if (!sc.allFinite()) {
      throw NumericalError("non-finite score at sampler step " + std::to_string(i) + " (t=" + std::to_string(t) + ")");
    }
    const double b = s.beta(t);
    z += sign * h * b * (0.5 * (z - mu_hat) + sc);
    if (i + 1 < cfg.steps) {
      const double g = std::sqrt(h * b);
      for (Eigen::Index k = 0; k < z.size(); ++k) z.data()[k] += g * n01(rng);
    }
    if (!z.allFinite()) throw NumericalError("sampler diverged at step " + std::to_string(i));
  }
  out.z = std::move(z);
  return out;
}

LatentStats LatentStats::compute(const Matrix& z, double min_std) {
  if (z.rows() < 1) throw ValidationError("latent statistics need at least one frame");
  LatentStats st;
  st.mean = z.colwise().mean();
  st.std = ((z.rowwise() - st.mean).array().square().colwise().sum() / static_cast<double>(z.rows())).sqrt();
  st.std = st.std.cwiseMax(min_std);
  return st;
}

void LatentStats::validate() const {
  if (mean.size() != std.size() || mean.size() == 0) throw ValidationError("latent stats have mismatched sizes");
  if (!(std.array() > 0.0).all() || !std.allFinite() || !mean.allFinite()) {
    throw ValidationError("latent stats need finite mean and std > 0 in every dim");
  }
}

void LatentStats::save(const std::filesystem::path& path) const {
  Matrix m(2, mean.size());
  m.row(0) = mean;
  m.row(1) = std;
  io::write_matrix(path, m, "rows", "D");
}

LatentStats LatentStats::load(const std::filesystem::path& path) {
  const Matrix m = io::read_matrix(path, "rows", "D");
  if (m.rows() != 2) throw ValidationError("latent stats file must hold 2 rows (mean, std)");
  LatentStats st{m.row(0), m.row(1)};
  st.validate();
  return st;
}

Matrix normalize_latent(const Matrix& z, const LatentStats& st) {
  st.validate();
  if (z.cols() != st.mean.size()) throw ValidationError("latent dim does not match the stats");
  return (z.rowwise() - st.mean).array().rowwise() / st.std.array();
}

Matrix denormalize_latent(const Matrix& z, const LatentStats& st) {
  st.validate();
  if (z.cols() != st.mean.size()) throw ValidationError("latent dim does not match the stats");
  return (z.array().rowwise() * st.std.array()).rowwise() + st.mean.array();
}

}  // namespace cantus::diffusion
