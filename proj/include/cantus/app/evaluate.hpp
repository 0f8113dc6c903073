#pragma once

#include <filesystem>
#include <optional>

#include "cantus/app/config.hpp"
#include "cantus/metrics/metrics.hpp"

namespace cantus::app {

struct EvaluateOptions {
  std::filesystem::path gt;    // .wav or log-mel .f32 with sidecar
  std::filesystem::path pred;
  std::optional<std::filesystem::path> gt_pitch;  // pitch JSON overrides
  std::optional<std::filesystem::path> pred_pitch;
  std::optional<std::filesystem::path> out;
};

/// Log-mel MAE plus pitch, periodicity and V/UV scores. Inputs are compared
/// frame for frame; lengths must already agree.
metrics::MetricReport evaluate_files(const RunConfig& cfg, const EvaluateOptions& opt);

}  // namespace cantus::app
