#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "cantus/app/config.hpp"
#include "cantus/app/corpus.hpp"
#include "cantus/neural/models.hpp"
#include "cantus/rvq/rvq.hpp"

namespace cantus::app {

/// Encoder, residual quantizer and decoder over log-mel frames, with the CTC
/// heads and optional critic used only during training.
struct CodecModel {
  RunConfig cfg;
  int alphabet = 1;
  nn::Encoder encoder;
  nn::Decoder decoder;
  nn::LogSoftmaxHead lyrics_head;
  nn::LogSoftmaxHead note_head;
  std::optional<nn::Discriminator> critic;
  rvq::RvqCoder coder;

  CodecModel(const RunConfig& cfg, int alphabet);

  nn::ParamList generator_params() const;
  nn::ParamList critic_params() const;

  Matrix encode_latent(const Matrix& log_mel) const;
  Matrix decode_latent(const Matrix& z) const;
  rvq::CodecCodes encode_codes(const Matrix& log_mel, int quantizers = -1) const;
  Matrix decode_codes(const rvq::CodecCodes& codes) const;
  /// Nearest-code projection of continuous latents.
  Matrix project(const Matrix& z, int quantizers = -1) const;
  /// encode_codes followed by decode_codes.
  Matrix reconstruct(const Matrix& log_mel, int quantizers = -1) const;

  /// Inference files only: codec.json, weights.f32 and codebooks.f32.
  void save(const std::filesystem::path& dir) const;
  static CodecModel load(const std::filesystem::path& dir);
};

/// CTC label sequence for frames [start, start+count) of a per-frame id
/// track. Consecutive runs become one label, 0 is dropped, and repeats are
/// merged when the window is too short to separate them.
std::vector<int> ctc_labels(const std::vector<int>& ids, int start, int count);
/// Same for notes: one pitch token per (partially) covered sung note.
std::vector<int> ctc_note_labels(const condition::FrameGrid& grid, int start, int count);

struct CodecTrainOptions {
  std::filesystem::path corpus;
  std::filesystem::path out;
  bool resume = false;
};

struct CodecTrainSummary {
  long steps = 0;
  double recon_l1_initial = 0.0;  // full corpus, before the first update
  double recon_l1_final = 0.0;
  nlohmann::json to_json() const;
};

CodecTrainSummary train_codec(const RunConfig& cfg, const CodecTrainOptions& opt);

/// Mean absolute log-mel error over every frame of the corpus.
double corpus_recon_l1(const CodecModel& m, const Corpus& corpus, int quantizers = -1);

void cmd_codec_encode(const std::filesystem::path& codec_dir, const std::filesystem::path& wav,
                      const std::filesystem::path& out, int quantizers);
void cmd_codec_decode(const std::filesystem::path& codec_dir, const std::filesystem::path& bitstream,
                      const std::filesystem::path& out, int quantizers);

}  // namespace cantus::app
