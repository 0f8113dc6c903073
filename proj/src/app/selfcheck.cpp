#include "cantus/app/selfcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "cantus/condition/network.hpp"
#include "cantus/diffusion/diffusion.hpp"
#include "cantus/error.hpp"
#include "cantus/losses/losses.hpp"
#include "cantus/neural/gradcheck.hpp"
#include "cantus/neural/models.hpp"
#include "cantus/neural/ops.hpp"
#include "cantus/rng.hpp"
#include "cantus/rvq/rvq.hpp"

namespace cantus::app {

namespace {

using nn::Tensor;

Matrix randn(int r, int c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

Tensor readout(const Tensor& y, const Matrix& r) { return nn::sum(nn::mul(y, Tensor::constant(r))); }

SuiteResult gradients() {
  auto rng = make_rng(0x5e1f, 1);
  double worst = 0.0;
  std::string where;
  auto track = [&](const nn::GradCheckResult& r, const std::string& what) {
    if (r.max_rel_err > worst) {
      worst = r.max_rel_err;
      where = what + ":" + r.worst;
    }
  };
  for (int point = 0; point < 10; ++point) {
    const auto seed = 300 + static_cast<std::uint64_t>(point);
    nn::Linear lin(6, 4, rng);
    nn::Conv1d3 conv(6, 8, rng);
    auto x = Tensor::parameter(randn(7, 6, rng));
    const Matrix r4 = randn(7, 4, rng), r8 = randn(7, 8, rng);
    nn::ParamList layers = {{"x", x}};
    lin.collect("lin.", layers);
    conv.collect("conv.", layers);
    track(nn::grad_check([&] { return nn::add(nn::add(readout(lin(x), r4), readout(conv(x), r8)),
                                              readout(nn::gated(conv(x)), r4)); },
                         layers, rng, 4),
          "layers");

    nn::ScoreNetConfig sc;
    sc.latent_dim = 3;
    sc.cond_dim = 5;
    sc.width = 8;
    sc.blocks = 2;
    sc.time_dim = 8;
    sc.noise_std = [](double t) { return std::sqrt(t); };
    nn::ScoreNet net(sc, seed);
    auto z = Tensor::parameter(randn(6, 3, rng));
    auto mu = Tensor::parameter(randn(6, 3, rng));
    auto h = Tensor::parameter(randn(6, 5, rng));
    const Matrix r3 = randn(6, 3, rng);
    const double t = 0.2 + 0.06 * point;
    nn::ParamList wrt = {{"z", z}, {"mu", mu}, {"h", h}};
    net.collect("score.", wrt);
    track(nn::grad_check([&] { return readout(net(z, mu, h, t), r3); }, wrt, rng, 3), "score");

    condition::ConditionNet cn({6, 5, 4, 3, 2, 7, 10, true}, seed);
    condition::FrameGrid g;
    g.phoneme = {1, 1, 2, 5, 0, 3};
    g.pitch = {60, 60, 62, 64, 0, 70};
    g.duration = {4, 4, 4, 8, 8, 2};
    g.tempo = {120, 120, 120, 90, 90, 90};
    auto feats = Tensor::parameter(randn(6, 7, rng));
    const std::vector<int> f0 = {0, 3, 3, 9, 10, 1};
    const Matrix rh = randn(6, 4, rng), rm = randn(6, 3, rng);
    nn::ParamList cw = {{"features", feats}};
    cn.collect("cond.", cw);
    track(nn::grad_check(
              [&] {
                const auto a = cn.build(g);
                const auto b = cn.build_unsupervised(feats, f0);
                return nn::add(nn::add(readout(a.h_cond, rh), readout(a.mu_hat, rm)),
                               nn::add(readout(b.h_cond, rh), readout(b.mu_hat, rm)));
              },
              cw, rng, 3),
          "condition");
  }
  std::ostringstream d;
  d << "max rel err " << worst << " at " << where;
  return {"gradients", worst < 1e-4, d.str()};
}

double ctc_brute_force(const Matrix& lp, const std::vector<int>& target) {
  const int T = static_cast<int>(lp.rows());
  const int K = static_cast<int>(lp.cols());
  std::vector<int> path(static_cast<std::size_t>(T), 0);
  double total = 0.0;
  while (true) {
    std::vector<int> collapsed;
    int prev = -1;
    for (int k : path) {
      if (k != prev && k != 0) collapsed.push_back(k);
      prev = k;
    }
    if (collapsed == target) {
      double p = 1.0;
      for (int t = 0; t < T; ++t) p *= std::exp(lp(t, path[t]));
      total += p;
    }
    int pos = 0;
    while (pos < T && ++path[pos] == K) path[pos++] = 0;
    if (pos == T) break;
  }
  return -std::log(total);
}

SuiteResult ctc() {
  auto rng = make_rng(0x5e1f, 2);
  std::uniform_int_distribution<int> pick_t(1, 5), pick_a(1, 3);
  int checked = 0;
  double worst = 0.0;
  while (checked < 50) {
    const int T = pick_t(rng);
    const int A = pick_a(rng);
    const int L = std::uniform_int_distribution<int>(1, T)(rng);
    std::vector<int> target(static_cast<std::size_t>(L));
    for (int& l : target) l = std::uniform_int_distribution<int>(1, A)(rng);
    if (losses::ctc_min_frames(target) > T) continue;
    Matrix logits = randn(T, A + 1, rng);
    Matrix lp = logits;
    for (int t = 0; t < T; ++t) {
      const double lse = std::log(logits.row(t).array().exp().sum());
      lp.row(t).array() -= lse;
    }
    worst = std::max(worst, std::abs(losses::ctc_loss(lp, target) - ctc_brute_force(lp, target)));
    ++checked;
  }
  std::ostringstream d;
  d << checked << " instances, max abs err " << worst;
  return {"ctc", worst < 1e-10, d.str()};
}

SuiteResult rvq_suite() {
  auto rng = make_rng(0x5e1f, 3);
  const Matrix data = randn(600, 4, rng);
  rvq::RvqConfig cfg;
  cfg.quantizers = 8;
  cfg.entries = 16;
  cfg.dim = 4;
  const auto coder = rvq::init_codebooks(cfg, data, 7);
  const Matrix probe = randn(200, 4, rng);
  bool monotone = true;
  double prev = rvq::mean_distortion(coder, probe, 1);
  for (int c = 2; c <= 8; ++c) {
    const double d = rvq::mean_distortion(coder, probe, c);
    monotone = monotone && d <= prev;
    prev = d;
  }
  const auto codes = rvq::encode(coder, probe);
  const auto again = rvq::deserialize(rvq::serialize({codes, 24000, 256}));
  const bool roundtrip = again.codes.indices == codes.indices && rvq::decode(coder, again.codes) == rvq::decode(coder, codes);

  const auto tr = rvq::encode_trace(coder, probe);
  double independent = 0.0;
  Matrix r = probe;
  for (int c = 0; c < coder.C(); ++c) {
    const Matrix q = tr.selected[c];
    independent += (r - q).rowwise().squaredNorm().sum() / static_cast<double>(r.rows());
    r -= q;
  }
  const double commit_err = std::abs(rvq::commitment_loss(tr.residuals, tr.selected) - independent);
  std::ostringstream d;
  d << "monotone=" << monotone << " roundtrip=" << roundtrip << " commitment err " << commit_err;
  return {"rvq", monotone && roundtrip && commit_err < 1e-10, d.str()};
}

SuiteResult forward_moments() {
  const diffusion::NoiseSchedule s;
  const int n = 100000;
  const int dims = 4;
  auto rng = make_rng(0x5e1f, 4);
  std::normal_distribution<double> n01(0.0, 1.0);
  // Mean stays in [1, 2] for every t, so relative errors are well conditioned.
  const double z0 = 2.0, mu = 1.0;
  double worst = 0.0;
  for (const double t : {0.25, 0.5, 1.0}) {
    // dz = 0.5 beta (mu - z) dt + sqrt(beta) dW, 1000 steps over [0, t].
    const int steps = 1000;
    const double h = t / steps;
    Matrix z = Matrix::Constant(n, dims, z0);
    for (int k = 0; k < steps; ++k) {
      const double b = s.beta(k * h);
      const double drift = 0.5 * b * h;
      const double diff = std::sqrt(b * h);
      double* v = z.data();
      for (Eigen::Index i = 0; i < z.size(); ++i) v[i] += drift * (mu - v[i]) + diff * n01(rng);
    }
    const auto f = diffusion::forward_sample(s, Matrix::Constant(n, dims, z0), Matrix::Constant(n, dims, mu), t,
                                             randn(n, dims, rng));
    // Dimensions are i.i.d., so moments pool over all n * dims draws.
    const double em_mean = z.mean();
    const double em_var = (z.array() - em_mean).square().sum() / static_cast<double>(z.size() - 1);
    const double fs_mean = f.z_t.mean();
    const double fs_var = (f.z_t.array() - fs_mean).square().sum() / static_cast<double>(f.z_t.size() - 1);
    worst = std::max({worst, std::abs(fs_mean - em_mean) / std::abs(em_mean), std::abs(fs_var - em_var) / em_var});
  }
  std::ostringstream d;
  d << "max relative moment error " << worst << " (" << n << " samples, D=" << dims << ")";
  return {"forward-moments", worst < 0.02, d.str()};
}

SuiteResult gaussian_sampler(bool flip) {
  const diffusion::NoiseSchedule s;
  const double sigma = 0.5, mean = 0.7;
  const int n = 10000;
  const Matrix mu = Matrix::Constant(n, 1, mean);
  const Matrix h = Matrix::Zero(n, 1);
  // Data N(mu, sigma^2) pushed through the transition stays Gaussian with
  // mean mu and variance w^2 sigma^2 + lambda.
  const diffusion::ScoreFn score = [&s, sigma](const Matrix& z, const Matrix& m, const Matrix&, double t) {
    const double w = s.data_weight(t);
    const double var = w * w * sigma * sigma + s.lambda(t);
    return Matrix(-(z - m) / var);
  };
  auto err = [&](int steps) {
    diffusion::SamplerConfig cfg{steps, 1.0, 11, flip};
    const Matrix z = diffusion::reverse_sample(score, mu, h, s, cfg).z;
    const double m = z.mean();
    const double sd = std::sqrt((z.array() - m).square().sum() / (n - 1));
    return std::pair{std::abs(m - mean), std::abs(sd - sigma) / sigma};
  };
  const auto [m200, s200] = err(200);
  const auto [m20, s20] = err(20);
  std::ostringstream d;
  d << "N=200 mean err " << m200 << " std err " << s200 << "; N=20 mean err " << m20 << " std err " << s20;
  return {"gaussian-sampler", m200 < 0.02 && s200 < 0.05 && m200 + s200 < m20 + s20, d.str()};
}

SuiteResult timed(const std::string& name, const std::function<SuiteResult()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult r;
  try {
    r = fn();
  } catch (const Error& e) {
    r = {name, false, std::string("threw: ") + e.what()};
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

const std::vector<std::string>& selfcheck_suites() {
  static const std::vector<std::string> names = {"gradients", "ctc", "rvq", "forward-moments", "gaussian-sampler"};
  return names;
}

std::vector<SuiteResult> run_selfcheck(const SelfcheckOptions& opt) {
  for (const auto& name : opt.only) {
    if (std::find(selfcheck_suites().begin(), selfcheck_suites().end(), name) == selfcheck_suites().end()) {
      throw ValidationError("unknown selfcheck suite '" + name + "'");
    }
  }
  const std::vector<std::pair<std::string, std::function<SuiteResult()>>> suites = {
      {"gradients", gradients},
      {"ctc", ctc},
      {"rvq", rvq_suite},
      {"forward-moments", forward_moments},
      {"gaussian-sampler", [&] { return gaussian_sampler(opt.flip_drift_sign); }}};
  std::vector<SuiteResult> out;
  for (const auto& [name, fn] : suites) {
    if (opt.only.empty() || std::find(opt.only.begin(), opt.only.end(), name) != opt.only.end()) {
      out.push_back(timed(name, fn));
    }
  }
  return out;
}

}  // namespace cantus::app
