#include "cantus/rvq/rvq.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "cantus/error.hpp"
#include "cantus/io.hpp"
#include "cantus/neural/ops.hpp"
#include "cantus/rng.hpp"

namespace cantus::rvq {

namespace {

int nearest(const Matrix& entries, const Eigen::Ref<const RowVector>& r) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < entries.rows(); ++k) {
    const double d = (entries.row(k) - r).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

int stages_to_use(const RvqCoder& coder, int max_quantizers) {
  if (max_quantizers < 0) return coder.C();
  if (max_quantizers < 1 || max_quantizers > coder.C()) {
    throw ValidationError("quantizer count " + std::to_string(max_quantizers) + " outside [1, " +
                          std::to_string(coder.C()) + "]");
  }
  return max_quantizers;
}

}  // namespace

Codebook Codebook::from_entries(Matrix entries) {
  Codebook b;
  b.ema_counts = Vector::Ones(entries.rows());
  b.ema_sums = entries;
  b.usage = Vector::Zero(entries.rows());
  b.entries = std::move(entries);
  return b;
}

void Codebook::validate() const {
  if (entries.rows() < 1 || entries.cols() < 1) throw ValidationError("codebook needs K >= 1 and D >= 1");
  if (!entries.allFinite()) throw ValidationError("codebook has non-finite entries");
  if (ema_counts.size() != entries.rows() || ema_sums.rows() != entries.rows() ||
      ema_sums.cols() != entries.cols() || usage.size() != entries.rows()) {
    throw ValidationError("codebook EMA state does not match its entries");
  }
  if ((ema_counts.array() < 0.0).any()) throw ValidationError("codebook EMA counts must be >= 0");
}

void RvqCoder::validate() const {
  if (books.empty()) throw ValidationError("coder needs at least one quantizer");
  for (const auto& b : books) {
    b.validate();
    if (b.K() != K() || b.D() != D()) throw ValidationError("all codebooks must share K and D");
  }
}

void CodecCodes::validate() const {
  if (C < 1 || K < 1 || D < 1) throw ValidationError("codes need positive C, K, D");
  if (indices.rows() != C) throw ValidationError("code grid has the wrong number of stages");
  if (indices.size() > 0 && (indices.minCoeff() < 0 || indices.maxCoeff() >= K)) {
    throw ValidationError("code index out of range [0, " + std::to_string(K) + ")");
  }
}

RvqCoder make_coder(const std::vector<Matrix>& entries, bool pin_zero) {
  RvqCoder c;
  for (const auto& e : entries) c.books.push_back(Codebook::from_entries(e));
  c.validate();
  c.config.quantizers = c.C();
  c.config.entries = c.K();
  c.config.dim = c.D();
  c.config.pin_zero = pin_zero;
  return c;
}

EncodeTrace encode_trace(const RvqCoder& coder, const Matrix& z, int max_quantizers) {
  if (z.cols() != coder.D()) {
    throw ValidationError("latent dim " + std::to_string(z.cols()) + " does not match codebook dim " +
                          std::to_string(coder.D()));
  }
  const int stages = stages_to_use(coder, max_quantizers);
  EncodeTrace tr;
  tr.codes.C = stages;
  tr.codes.K = coder.K();
  tr.codes.D = coder.D();
  tr.codes.indices.resize(stages, z.rows());
  Matrix r = z;
  tr.quantized = Matrix::Zero(z.rows(), z.cols());
  for (int c = 0; c < stages; ++c) {
    const Matrix& entries = coder.books[c].entries;
    Matrix q(z.rows(), z.cols());
    for (Eigen::Index t = 0; t < z.rows(); ++t) {
      const int k = nearest(entries, r.row(t));
      tr.codes.indices(c, t) = k;
      q.row(t) = entries.row(k);
    }
    tr.residuals.push_back(r);
    r -= q;
    tr.quantized += q;
    tr.selected.push_back(std::move(q));
  }
  tr.final_residual = std::move(r);
  return tr;
}

CodecCodes encode(const RvqCoder& coder, const Matrix& z, int max_quantizers) {
  return encode_trace(coder, z, max_quantizers).codes;
}

Matrix decode(const RvqCoder& coder, const CodecCodes& codes) {
  codes.validate();
  if (codes.K != coder.K() || codes.D != coder.D() || codes.C > coder.C()) {
    throw ValidationError("codes (C=" + std::to_string(codes.C) + ", K=" + std::to_string(codes.K) +
                          ", D=" + std::to_string(codes.D) + ") do not fit the codebooks (C=" +
                          std::to_string(coder.C()) + ", K=" + std::to_string(coder.K()) +
                          ", D=" + std::to_string(coder.D()) + ")");
  }
  Matrix out = Matrix::Zero(codes.frames(), codes.D);
  for (int c = 0; c < codes.C; ++c) {
    for (int t = 0; t < codes.frames(); ++t) out.row(t) += coder.books[c].entries.row(codes.indices(c, t));
  }
  return out;
}

CodecCodes truncate(const CodecCodes& codes, int quantizers) {
  if (quantizers < 1 || quantizers > codes.C) {
    throw ValidationError("cannot truncate " + std::to_string(codes.C) + " stages to " +
                          std::to_string(quantizers));
  }
  CodecCodes out = codes;
  out.C = quantizers;
  out.indices = codes.indices.topRows(quantizers);
  return out;
}

double commitment_loss(std::span<const Matrix> residuals, std::span<const Matrix> selected) {
  if (residuals.size() != selected.size()) throw ValidationError("commitment loss: stage counts differ");
  double total = 0.0;
  for (std::size_t c = 0; c < residuals.size(); ++c) {
    const Matrix& r = residuals[c];
    const Matrix& q = selected[c];
    if (r.rows() != q.rows() || r.cols() != q.cols()) throw ValidationError("commitment loss: shapes differ");
    if (r.rows() == 0) throw ValidationError("commitment loss: no frames");
    total += (r - q).squaredNorm() / static_cast<double>(r.rows());
  }
  return total;
}

StraightThrough quantize_st(const RvqCoder& coder, const nn::Tensor& z, int max_quantizers) {
  StraightThrough st;
  st.trace = encode_trace(coder, z.value(), max_quantizers);
  // z + const(z_q - z): forward value z_q, identity gradient.
  st.quantized = nn::add(z, nn::Tensor::constant(st.trace.quantized - z.value()));
  // r_c - q_c = z - sum_{j<=c} q_j with the entries held constant.
  const double inv_frames = 1.0 / static_cast<double>(z.rows());
  Matrix cumulative = Matrix::Zero(z.rows(), z.cols());
  nn::Tensor total;
  for (const Matrix& q : st.trace.selected) {
    cumulative += q;
    const nn::Tensor term = nn::scale(nn::sum(nn::square(nn::sub(z, nn::Tensor::constant(cumulative)))), inv_frames);
    total = total.defined() ? nn::add(total, term) : term;
  }
  st.commitment = total;
  return st;
}

namespace {

Matrix kmeans(const Matrix& x, int k, bool pin_zero, int iters, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  Matrix centers(k, x.cols());
  int have = 0;
  Vector d2 = Vector::Constant(n, std::numeric_limits<double>::infinity());
  auto absorb = [&](int idx) {
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), (x.row(i) - centers.row(idx)).squaredNorm());
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (pin_zero) {
    centers.row(0).setZero();
    absorb(have++);
  } else {
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    centers.row(0) = x.row(pick(rng));
    absorb(have++);
  }
  while (have < k) {
    const double total = d2.sum();
    Eigen::Index chosen = n - 1;
    if (total > 0.0) {
      double u = unit(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= d2(i);
        if (u < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    }
    centers.row(have) = x.row(chosen);
    absorb(have++);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < iters; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = nearest(centers, x.row(i));
      if (a != assign[i]) {
        assign[i] = a;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(k, x.cols());
    Vector counts = Vector::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += x.row(i);
      counts(assign[i]) += 1.0;
    }
    for (int c = pin_zero ? 1 : 0; c < k; ++c) {
      if (counts(c) > 0.0) centers.row(c) = sums.row(c) / counts(c);
    }
  }
  return centers;
}

}  // namespace

RvqCoder init_codebooks(const RvqConfig& cfg, const Matrix& samples, std::uint64_t seed) {
  if (cfg.quantizers < 1 || cfg.entries < 1 || cfg.dim < 1) throw ValidationError("RVQ sizes must be positive");
  if (samples.cols() != cfg.dim) throw ValidationError("sample dim does not match the RVQ dim");
  if (samples.rows() < cfg.entries) {
    throw ValidationError("need at least K=" + std::to_string(cfg.entries) + " sample frames, got " +
                          std::to_string(samples.rows()));
  }
  RvqCoder coder;
  coder.config = cfg;
  Matrix r = samples;
  for (int c = 0; c < cfg.quantizers; ++c) {
    auto rng = make_rng(seed, 0xc0de, static_cast<std::uint64_t>(c));
    Matrix centers = kmeans(r, cfg.entries, cfg.pin_zero, cfg.kmeans_iters, rng);
    for (Eigen::Index i = 0; i < r.rows(); ++i) r.row(i) -= centers.row(nearest(centers, r.row(i)));
    coder.books.push_back(Codebook::from_entries(std::move(centers)));
  }
  return coder;
}

void ema_update(RvqCoder& coder, const Matrix& z, std::mt19937_64& rng) {
  ema_update(coder, z, coder.config.decay, rng);
}

void ema_update(RvqCoder& coder, const Matrix& z, double decay, std::mt19937_64& rng) {
  if (!(decay >= 0.0 && decay < 1.0)) throw ValidationError("EMA decay must be in [0, 1)");
  const EncodeTrace tr = encode_trace(coder, z);
  const int first = coder.config.pin_zero ? 1 : 0;
  ++coder.updates;
  const bool check_dead =
      coder.config.reseed_interval > 0 && coder.updates % coder.config.reseed_interval == 0;
  for (int c = 0; c < coder.C(); ++c) {
    Codebook& b = coder.books[c];
    const Matrix& r = tr.residuals[c];
    Vector n = Vector::Zero(b.K());
    Matrix s = Matrix::Zero(b.K(), b.D());
    for (int t = 0; t < z.rows(); ++t) {
      const int k = tr.codes.indices(c, t);
      n(k) += 1.0;
      s.row(k) += r.row(t);
    }
    b.usage += n;
    for (int k = first; k < b.K(); ++k) {
      b.ema_counts(k) = decay * b.ema_counts(k) + (1.0 - decay) * n(k);
      b.ema_sums.row(k) = decay * b.ema_sums.row(k) + (1.0 - decay) * s.row(k);
      b.entries.row(k) = b.ema_sums.row(k) / std::max(b.ema_counts(k), coder.config.eps);
    }
    if (check_dead) {
      std::uniform_int_distribution<Eigen::Index> pick(0, r.rows() - 1);
      for (int k = first; k < b.K(); ++k) {
        if (b.usage(k) >= coder.config.dead_threshold) continue;
        b.entries.row(k) = r.row(pick(rng));
        b.ema_sums.row(k) = b.entries.row(k);
        b.ema_counts(k) = 1.0;
      }
      b.usage.setZero();
    }
  }
}

double mean_distortion(const RvqCoder& coder, const Matrix& z, int max_quantizers) {
  const EncodeTrace tr = encode_trace(coder, z, max_quantizers);
  return tr.final_residual.squaredNorm() / static_cast<double>(z.rows());
}

void round_to_f32(RvqCoder& coder) {
  for (auto& b : coder.books) {
    io::round_to_f32(b.entries);
    io::round_to_f32(b.ema_sums);
    for (Eigen::Index k = 0; k < b.ema_counts.size(); ++k) b.ema_counts(k) = io::to_f32(b.ema_counts(k));
  }
}

}  // namespace cantus::rvq
