#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "cantus/neural/tensor.hpp"
#include "cantus/types.hpp"

namespace cantus::rvq {

using IndexGrid = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Codebook {
  Matrix entries;     // K x D
  Vector ema_counts;  // K
  Matrix ema_sums;    // K x D
  Vector usage;       // assignments since the last dead-code check

  static Codebook from_entries(Matrix entries);
  int K() const { return static_cast<int>(entries.rows()); }
  int D() const { return static_cast<int>(entries.cols()); }
  void validate() const;
};

struct RvqConfig {
  int quantizers = 8;
  int entries = 64;
  int dim = 16;
  /// Keep entry 0 of every stage at the origin. Guarantees that adding a
  /// stage never increases distortion.
  bool pin_zero = true;
  int kmeans_iters = 25;
  double decay = 0.99;
  double eps = 1e-5;
  double dead_threshold = 2.0;
  int reseed_interval = 100;
};

struct RvqCoder {
  RvqConfig config;
  std::vector<Codebook> books;
  std::int64_t updates = 0;

  int C() const { return static_cast<int>(books.size()); }
  int K() const { return books.empty() ? 0 : books.front().K(); }
  int D() const { return books.empty() ? 0 : books.front().D(); }
  void validate() const;
};

/// Indices for C stages over `frames` frames, plus the shape metadata.
struct CodecCodes {
  int C = 0;
  int K = 0;
  int D = 0;
  IndexGrid indices;  // C x frames
  int frames() const { return static_cast<int>(indices.cols()); }
  void validate() const;
};

struct EncodeTrace {
  CodecCodes codes;
  std::vector<Matrix> residuals;  // r_c, frames x D, one per stage
  std::vector<Matrix> selected;   // q_c(r_c)
  Matrix quantized;               // sum of selected entries
  Matrix final_residual;          // z - quantized
};

RvqCoder make_coder(const std::vector<Matrix>& entries, bool pin_zero = false);

/// Greedy residual encode, ties to the lowest index. `max_quantizers` < 0
/// uses every stage.
EncodeTrace encode_trace(const RvqCoder& coder, const Matrix& z, int max_quantizers = -1);
CodecCodes encode(const RvqCoder& coder, const Matrix& z, int max_quantizers = -1);
/// Sums selected entries over the stages present in `codes` (which may be
/// fewer than the coder has).
Matrix decode(const RvqCoder& coder, const CodecCodes& codes);
CodecCodes truncate(const CodecCodes& codes, int quantizers);

/// Sum over stages of the per-frame mean squared residual norm.
double commitment_loss(std::span<const Matrix> residuals, std::span<const Matrix> selected);

struct StraightThrough {
  nn::Tensor quantized;   // value = z_q, gradient passes to z unchanged
  nn::Tensor commitment;  // gradient reaches z only
  EncodeTrace trace;
};
StraightThrough quantize_st(const RvqCoder& coder, const nn::Tensor& z, int max_quantizers = -1);

/// Stage-wise k-means++ plus Lloyd iterations on the residual stream.
RvqCoder init_codebooks(const RvqConfig& cfg, const Matrix& samples, std::uint64_t seed);

/// One EMA step on a batch of latents. Dead entries (usage below the
/// threshold over `reseed_interval` updates) are reseeded from batch residuals.
void ema_update(RvqCoder& coder, const Matrix& z, std::mt19937_64& rng);
/// Like ema_update with an explicit decay, for degenerate-decay checks.
void ema_update(RvqCoder& coder, const Matrix& z, double decay, std::mt19937_64& rng);

double mean_distortion(const RvqCoder& coder, const Matrix& z, int max_quantizers = -1);

void round_to_f32(RvqCoder& coder);

// Files

/// Codec bitstream: "HSC1", u16 C, u16 K, u16 D, u32 frames, u32 sample_rate,
/// u32 hop, then frame-major u16 indices. Little-endian.
struct Bitstream {
  CodecCodes codes;
  std::uint32_t sample_rate = 0;
  std::uint32_t hop = 0;
};
std::vector<std::uint8_t> serialize(const Bitstream& b);
Bitstream deserialize(std::span<const std::uint8_t> bytes);
void write_bitstream(const std::filesystem::path& path, const Bitstream& b);
Bitstream read_bitstream(const std::filesystem::path& path);

/// Entries as raw f32 with sidecar {C, K, D, pin_zero}.
void save_codebooks(const std::filesystem::path& path, const RvqCoder& coder);
RvqCoder load_codebooks(const std::filesystem::path& path);
/// EMA statistics for resuming training (counts, sums, usage, update count).
void save_ema_state(const std::filesystem::path& path, const RvqCoder& coder);
void load_ema_state(const std::filesystem::path& path, RvqCoder& coder);

}  // namespace cantus::rvq
