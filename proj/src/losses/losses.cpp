#include "cantus/losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cantus/error.hpp"

namespace cantus::losses {

void LossWeights::validate() const {
  for (double w : {recon, emb, fm, lyrics, note, prior}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("loss weights must be finite and >= 0");
  }
}

namespace {

void same_shape(const char* what, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(std::string(what) + ": shapes differ (" + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
  }
}

}  // namespace

Tensor recon_l1(const Tensor& x, const Tensor& x_hat) {
  same_shape("recon_l1", x, x_hat);
  return nn::mean(nn::abs(nn::sub(x, x_hat)));
}

Tensor lsgan_d(const Tensor& real_scores, const Tensor& fake_scores) {
  return nn::add(nn::mean(nn::square(nn::add_scalar(real_scores, -1.0))), nn::mean(nn::square(fake_scores)));
}

Tensor lsgan_g(const Tensor& fake_scores) { return nn::mean(nn::square(nn::add_scalar(fake_scores, -1.0))); }

Tensor feature_matching(std::span<const Tensor> real_feats, std::span<const Tensor> fake_feats) {
  if (real_feats.size() != fake_feats.size() || real_feats.empty()) {
    throw ValidationError("feature matching needs equal, non-zero layer counts");
  }
  Tensor total;
  for (std::size_t l = 0; l < real_feats.size(); ++l) {
    same_shape("feature_matching", real_feats[l], fake_feats[l]);
    const Tensor term = nn::mean(nn::abs(nn::sub(real_feats[l], fake_feats[l])));
    total = total.defined() ? nn::add(total, term) : term;
  }
  return total;
}

// CTC

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

struct CtcLattice {
  std::vector<int> ext;  // blank-interleaved labels
  Matrix alpha;          // frames x S, log space, emissions included
  Matrix beta;
  double log_likelihood = kNegInf;
};

CtcLattice ctc_lattice(const Matrix& lp, std::span<const int> target, bool with_beta) {
  const int classes = static_cast<int>(lp.cols());
  if (classes < 2) throw ValidationError("CTC needs at least one label besides blank");
  for (const int l : target) {
    if (l < 1 || l >= classes) {
      throw ValidationError("CTC label " + std::to_string(l) + " outside [1, " + std::to_string(classes - 1) + "]");
    }
  }
  const int frames = static_cast<int>(lp.rows());
  if (frames < ctc_min_frames(target)) {
    throw ValidationError("CTC target of length " + std::to_string(target.size()) + " needs at least " +
                          std::to_string(ctc_min_frames(target)) + " frames, got " + std::to_string(frames));
  }
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    const double v = lp.data()[i];
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw NumericalError("CTC log-probabilities must be finite or -inf");
    }
  }
  CtcLattice L;
  L.ext.push_back(0);
  for (const int l : target) {
    L.ext.push_back(l);
    L.ext.push_back(0);
  }
  const int S = static_cast<int>(L.ext.size());
  // s may come from s-2 when it is a label different from the label two back.
  auto skip_ok = [&](int s) { return s >= 2 && L.ext[s] != 0 && L.ext[s] != L.ext[s - 2]; };

  L.alpha = Matrix::Constant(frames, S, kNegInf);
  L.alpha(0, 0) = lp(0, L.ext[0]);
  if (S > 1) L.alpha(0, 1) = lp(0, L.ext[1]);
  for (int t = 1; t < frames; ++t) {
    for (int s = 0; s < S; ++s) {
      double a = L.alpha(t - 1, s);
      if (s >= 1) a = logaddexp(a, L.alpha(t - 1, s - 1));
      if (skip_ok(s)) a = logaddexp(a, L.alpha(t - 1, s - 2));
      L.alpha(t, s) = a == kNegInf ? kNegInf : a + lp(t, L.ext[s]);
    }
  }
  L.log_likelihood = L.alpha(frames - 1, S - 1);
  if (S > 1) L.log_likelihood = logaddexp(L.log_likelihood, L.alpha(frames - 1, S - 2));

  if (with_beta) {
    L.beta = Matrix::Constant(frames, S, kNegInf);
    L.beta(frames - 1, S - 1) = lp(frames - 1, L.ext[S - 1]);
    if (S > 1) L.beta(frames - 1, S - 2) = lp(frames - 1, L.ext[S - 2]);
    for (int t = frames - 2; t >= 0; --t) {
      for (int s = 0; s < S; ++s) {
        double b = L.beta(t + 1, s);
        if (s + 1 < S) b = logaddexp(b, L.beta(t + 1, s + 1));
        if (s + 2 < S && skip_ok(s + 2)) b = logaddexp(b, L.beta(t + 1, s + 2));
        L.beta(t, s) = b == kNegInf ? kNegInf : b + lp(t, L.ext[s]);
      }
    }
  }
  return L;
}

}  // namespace

int ctc_min_frames(std::span<const int> target) {
  int n = static_cast<int>(target.size());
  for (std::size_t i = 1; i < target.size(); ++i) n += target[i] == target[i - 1] ? 1 : 0;
  return std::max(n, 1);
}

double ctc_loss(const Matrix& log_probs, std::span<const int> target) {
  const auto L = ctc_lattice(log_probs, target, false);
  if (L.log_likelihood == kNegInf) throw NumericalError("CTC: target has zero probability under log_probs");
  return -L.log_likelihood;
}

Tensor ctc_loss(const Tensor& log_probs, std::span<const int> target) {
  auto L = ctc_lattice(log_probs.value(), target, log_probs.requires_grad());
  if (L.log_likelihood == kNegInf) throw NumericalError("CTC: target has zero probability under log_probs");
  const double nll = -L.log_likelihood;
  return nn::make_op("ctc", Matrix::Constant(1, 1, nll), {log_probs}, [L = std::move(L)](nn::Node& n) {
    nn::Node& x = *n.parents[0];
    if (!x.requires_grad) return;
    // d(-log P)/d log y_t(k) = -sum_{s: ext_s = k} exp(alpha_t(s) + beta_t(s) - log y_t(k) - log P)
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    for (Eigen::Index t = 0; t < g.rows(); ++t) {
      for (std::size_t s = 0; s < L.ext.size(); ++s) {
        const double a = L.alpha(t, static_cast<Eigen::Index>(s));
        const double b = L.beta(t, static_cast<Eigen::Index>(s));
        if (a == kNegInf || b == kNegInf) continue;
        const int k = L.ext[s];
        g(t, k) -= std::exp(a + b - x.value(t, k) - L.log_likelihood);
      }
    }
    x.add_grad(n.grad(0, 0) * g);
  });
}

// Contrastive

NegativeSets sample_negatives(int frames, int n_neg, std::mt19937_64& rng) {
  if (frames < 2) throw ValidationError("contrastive loss needs at least 2 frames");
  if (n_neg < 1) throw ValidationError("n_neg must be >= 1");
  const int n = std::min(n_neg, frames - 1);
  NegativeSets sets(static_cast<std::size_t>(frames));
  std::vector<int> pool(static_cast<std::size_t>(frames - 1));
  for (int t = 0; t < frames; ++t) {
    // Partial Fisher-Yates over every frame except t.
    for (int k = 0, j = 0; k < frames; ++k) {
      if (k != t) pool[j++] = k;
    }
    for (int i = 0; i < n; ++i) {
      std::uniform_int_distribution<int> pick(i, frames - 2);
      std::swap(pool[i], pool[pick(rng)]);
    }
    sets[t].assign(pool.begin(), pool.begin() + n);
  }
  return sets;
}

namespace {

Matrix unit_rows(const Matrix& h, const char* name, Vector& norms) {
  norms = h.rowwise().norm();
  for (Eigen::Index t = 0; t < h.rows(); ++t) {
    if (!(norms(t) > 1e-12)) {
      throw ValidationError(std::string("contrastive loss: row ") + std::to_string(t) + " of " + name +
                            " is a zero vector, cosine undefined");
    }
  }
  return h.array().colwise() / norms.array();
}

// One direction: anchors a (unit rows), positives p, negatives from a itself.
// Accumulates dL/da and dL/dp (w.r.t. unit rows).
double direction(const Matrix& a, const Matrix& p, double tau, const NegativeSets& negs, Matrix& ga, Matrix& gp) {
  double total = 0.0;
  std::vector<double> logits;
  for (Eigen::Index t = 0; t < a.rows(); ++t) {
    const auto& N = negs[static_cast<std::size_t>(t)];
    const double pos = a.row(t).dot(p.row(t)) / tau;
    logits.resize(N.size());
    for (std::size_t i = 0; i < N.size(); ++i) logits[i] = a.row(t).dot(a.row(N[i])) / tau;
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (const double l : logits) z += std::exp(l - m);
    total += -pos + m + std::log(z);
    ga.row(t) -= p.row(t) / tau;
    gp.row(t) -= a.row(t) / tau;
    for (std::size_t i = 0; i < N.size(); ++i) {
      const double w = std::exp(logits[i] - m) / z / tau;
      ga.row(t) += w * a.row(N[i]);
      ga.row(N[i]) += w * a.row(t);
    }
  }
  return total;
}

// Back through row normalisation u = h / |h|.
Matrix through_norm(const Matrix& gu, const Matrix& u, const Vector& norms) {
  const Vector dots = (gu.cwiseProduct(u)).rowwise().sum();
  Matrix g = gu - (u.array().colwise() * dots.array()).matrix();
  return g.array().colwise() / norms.array();
}

}  // namespace

Tensor contrastive_loss(const Tensor& h, const Tensor& h_tilde, double tau, const NegativeSets& negatives) {
  same_shape("contrastive_loss", h, h_tilde);
  if (h.rows() < 2) throw ValidationError("contrastive loss needs at least 2 frames");
  if (!(tau > 0.0)) throw ValidationError("contrastive temperature must be positive");
  if (negatives.size() != static_cast<std::size_t>(h.rows())) {
    throw ValidationError("contrastive loss needs one negative set per frame");
  }
  for (std::size_t t = 0; t < negatives.size(); ++t) {
    if (negatives[t].empty()) throw ValidationError("contrastive loss: empty negative set");
    for (const int k : negatives[t]) {
      if (k < 0 || k >= h.rows() || k == static_cast<int>(t)) {
        throw ValidationError("contrastive loss: invalid negative index " + std::to_string(k));
      }
    }
  }
  Vector nh, nt;
  const Matrix u = unit_rows(h.value(), "h", nh);
  const Matrix v = unit_rows(h_tilde.value(), "h_tilde", nt);
  Matrix gu = Matrix::Zero(u.rows(), u.cols());
  Matrix gv = Matrix::Zero(v.rows(), v.cols());
  double loss = direction(u, v, tau, negatives, gu, gv);
  loss += direction(v, u, tau, negatives, gv, gu);
  Matrix gh = through_norm(gu, u, nh);
  Matrix gt = through_norm(gv, v, nt);
  return nn::make_op("contrastive", Matrix::Constant(1, 1, loss), {h, h_tilde},
                     [gh = std::move(gh), gt = std::move(gt)](nn::Node& n) {
                       const double s = n.grad(0, 0);
                       if (n.parents[0]->requires_grad) n.parents[0]->add_grad(s * gh);
                       if (n.parents[1]->requires_grad) n.parents[1]->add_grad(s * gt);
                     });
}

}  // namespace cantus::losses
