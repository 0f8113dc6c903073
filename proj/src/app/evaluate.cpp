#include "cantus/app/evaluate.hpp"

#include "cantus/app/corpus.hpp"
#include "cantus/error.hpp"
#include "cantus/io.hpp"
#include "cantus/signal/pitch_io.hpp"
#include "cantus/signal/wav.hpp"

namespace cantus::app {

namespace {

struct Features {
  Matrix log_mel;
  signal::PitchTrack pitch;
};

Features load_features(const std::filesystem::path& path, const RunConfig& cfg) {
  Features f;
  if (path.extension() == ".wav") {
    const auto audio = signal::read_wav(path);
    if (audio.sample_rate != cfg.sample_rate) {
      throw ValidationError(path.string() + " is " + std::to_string(audio.sample_rate) + " Hz, config expects " +
                            std::to_string(cfg.sample_rate));
    }
    f.log_mel = log_mel(audio, cfg);
    f.pitch = signal::estimate_f0(audio, cfg.stft(), pitch_config(cfg));
  } else {
    f.log_mel = io::read_matrix(path, "frames", "mel_bins");
    f.pitch = f0_from_log_mel(f.log_mel, cfg);
  }
  return f;
}

}  // namespace

metrics::MetricReport evaluate_files(const RunConfig& cfg, const EvaluateOptions& opt) {
  auto gt = load_features(opt.gt, cfg);
  auto pred = load_features(opt.pred, cfg);
  if (opt.gt_pitch) gt.pitch = signal::read_pitch_track(*opt.gt_pitch);
  if (opt.pred_pitch) pred.pitch = signal::read_pitch_track(*opt.pred_pitch);
  const auto report = metrics::evaluate(gt.log_mel, pred.log_mel, gt.pitch, pred.pitch);
  if (opt.out) io::write_json(*opt.out, report.to_json());
  return report;
}

}  // namespace cantus::app
