#pragma once

#include <nlohmann/json.hpp>

#include "cantus/signal/types.hpp"

namespace cantus::metrics {

struct MetricReport {
  double mae = 0.0;
  double pitch_cents_rmse = 0.0;
  double periodicity_rmse = 0.0;
  double vuv_f1 = 0.0;
  int frames_compared = 0;  // frames voiced in both tracks
  nlohmann::json to_json() const;
};

/// Mean over frames of the mean absolute difference over bins. No time
/// alignment is performed, so frame counts must match.
double spec_mae(const Matrix& gt, const Matrix& pred);
double spec_mae(const signal::Spectrogram& gt, const signal::Spectrogram& pred);

struct PitchError {
  double cents_rmse = 0.0;
  int frames_compared = 0;
};
/// RMSE of 1200 (log2 p - log2 p') over frames voiced in both tracks.
PitchError pitch_error_cents(const signal::PitchTrack& gt, const signal::PitchTrack& pred);

/// RMSE of the periodicity difference over all frames.
double periodicity_error(const signal::PitchTrack& gt, const signal::PitchTrack& pred);

/// F1 with voiced as the positive class; 0 when neither track has a voiced frame.
double vuv_f1(const signal::PitchTrack& gt, const signal::PitchTrack& pred);

MetricReport evaluate(const Matrix& gt_spec, const Matrix& pred_spec, const signal::PitchTrack& gt_pitch,
                      const signal::PitchTrack& pred_pitch);

}  // namespace cantus::metrics
