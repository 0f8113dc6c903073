#pragma once

#include <random>
#include <span>
#include <vector>

#include "cantus/neural/ops.hpp"

namespace cantus::losses {

using nn::Tensor;

struct LossWeights {
  double recon = 45.0;
  double emb = 0.02;
  double fm = 2.0;
  double lyrics = 1.0;
  double note = 1.0;
  double prior = 1.0;
  void validate() const;
};

/// Mean absolute difference over all entries. Shapes must match exactly.
Tensor recon_l1(const Tensor& x, const Tensor& x_hat);

/// mean((real - 1)^2) + mean(fake^2)
Tensor lsgan_d(const Tensor& real_scores, const Tensor& fake_scores);
/// mean((fake - 1)^2)
Tensor lsgan_g(const Tensor& fake_scores);

/// Sum over layers of the per-layer mean absolute difference.
Tensor feature_matching(std::span<const Tensor> real_feats, std::span<const Tensor> fake_feats);

/// Negative log-likelihood of `target` (labels in [1, A], blank = 0) under
/// frame-wise log-probabilities (frames x (A+1)), summed over all alignments.
/// Entries of -inf are allowed in the double overload.
double ctc_loss(const Matrix& log_probs, std::span<const int> target);
/// Differentiable w.r.t. log_probs.
Tensor ctc_loss(const Tensor& log_probs, std::span<const int> target);
/// Fewest frames that can carry `target`: its length plus one blank per repeat.
int ctc_min_frames(std::span<const int> target);

using NegativeSets = std::vector<std::vector<int>>;
/// For each anchor t, min(n_neg, frames - 1) distinct frames k != t.
NegativeSets sample_negatives(int frames, int n_neg, std::mt19937_64& rng);

/// Symmetric InfoNCE over paired rows of h and h_tilde:
///   sum_t -log[ exp(cos(h_t, h~_t)/tau) / sum_{k in N_t} exp(cos(h_t, h_k)/tau) ]
/// plus the same with the streams swapped (negatives from the anchor's own stream).
Tensor contrastive_loss(const Tensor& h, const Tensor& h_tilde, double tau, const NegativeSets& negatives);

template <typename T>
struct GeneratorParts {
  T adv;
  T recon;
  T emb;
  T fm;
  T lyrics;
  T note;
};

/// adv + w.recon*recon + w.emb*emb + w.fm*fm + w.lyrics*lyrics + w.note*note
template <typename T>
T generator_total(const GeneratorParts<T>& p, const LossWeights& w) {
  return p.adv + p.recon * w.recon + p.emb * w.emb + p.fm * w.fm + p.lyrics * w.lyrics + p.note * w.note;
}

/// l_diff + lambda_prior * l_prior + sum of contrastive terms.
template <typename T>
T latent_generator_total(const T& l_diff, const T& l_prior, double lambda_prior,
                         std::span<const T> contrastive = {}) {
  T total = l_diff + l_prior * lambda_prior;
  for (const T& c : contrastive) total = total + c;
  return total;
}

}  // namespace cantus::losses
