#include "cantus/metrics/metrics.hpp"

#include <cmath>
#include <string>

#include "cantus/error.hpp"

namespace cantus::metrics {

namespace {

void same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ValidationError(std::string(what) + ": lengths differ (" + std::to_string(a) + " vs " +
                          std::to_string(b) + " frames); outputs are compared frame by frame without time "
                          "alignment, so they must have the same length");
  }
}

void check_tracks(const signal::PitchTrack& a, const signal::PitchTrack& b, const char* what) {
  a.validate();
  b.validate();
  same_length(a.size(), b.size(), what);
}

}  // namespace

nlohmann::json MetricReport::to_json() const {
  return {{"mae", mae},
          {"pitch_cents_rmse", pitch_cents_rmse},
          {"periodicity_rmse", periodicity_rmse},
          {"vuv_f1", vuv_f1},
          {"frames_compared", frames_compared}};
}

double spec_mae(const Matrix& gt, const Matrix& pred) {
  same_length(static_cast<std::size_t>(gt.rows()), static_cast<std::size_t>(pred.rows()), "spec_mae");
  if (gt.cols() != pred.cols()) throw ValidationError("spec_mae: bin counts differ");
  if (gt.rows() == 0 || gt.cols() == 0) throw ValidationError("spec_mae: empty spectrogram");
  return ((gt - pred).cwiseAbs().rowwise().sum() / static_cast<double>(gt.cols())).mean();
}

double spec_mae(const signal::Spectrogram& gt, const signal::Spectrogram& pred) {
  if (gt.kind != pred.kind) throw ValidationError("spec_mae: spectrogram kinds differ");
  return spec_mae(gt.data, pred.data);
}

PitchError pitch_error_cents(const signal::PitchTrack& gt, const signal::PitchTrack& pred) {
  check_tracks(gt, pred, "pitch_error_cents");
  PitchError e;
  double sq = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt.voiced[i] || !pred.voiced[i]) continue;
    const double d = 1200.0 * std::log2(gt.f0[i] / pred.f0[i]);
    sq += d * d;
    ++e.frames_compared;
  }
  e.cents_rmse = e.frames_compared > 0 ? std::sqrt(sq / e.frames_compared) : 0.0;
  return e;
}

double periodicity_error(const signal::PitchTrack& gt, const signal::PitchTrack& pred) {
  check_tracks(gt, pred, "periodicity_error");
  if (gt.size() == 0) return 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double d = gt.periodicity[i] - pred.periodicity[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(gt.size()));
}

double vuv_f1(const signal::PitchTrack& gt, const signal::PitchTrack& pred) {
  check_tracks(gt, pred, "vuv_f1");
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.voiced[i] && pred.voiced[i]) ++tp;
    if (!gt.voiced[i] && pred.voiced[i]) ++fp;
    if (gt.voiced[i] && !pred.voiced[i]) ++fn;
  }
  if (tp == 0) return 0.0;
  const double p = static_cast<double>(tp) / (tp + fp);
  const double r = static_cast<double>(tp) / (tp + fn);
  return 2.0 * p * r / (p + r);
}

MetricReport evaluate(const Matrix& gt_spec, const Matrix& pred_spec, const signal::PitchTrack& gt_pitch,
                      const signal::PitchTrack& pred_pitch) {
  MetricReport r;
  r.mae = spec_mae(gt_spec, pred_spec);
  const auto pe = pitch_error_cents(gt_pitch, pred_pitch);
  r.pitch_cents_rmse = pe.cents_rmse;
  r.frames_compared = pe.frames_compared;
  r.periodicity_rmse = periodicity_error(gt_pitch, pred_pitch);
  r.vuv_f1 = vuv_f1(gt_pitch, pred_pitch);
  return r;
}

}  // namespace cantus::metrics
