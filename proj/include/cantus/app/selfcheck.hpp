#pragma once

#include <string>
#include <vector>

namespace cantus::app {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct SelfcheckOptions {
  /// Mutation hook: negate the sampler drift so the Gaussian suite must fail.
  bool flip_drift_sign = false;
  /// Run only these suites; empty runs all.
  std::vector<std::string> only;
};

const std::vector<std::string>& selfcheck_suites();

/// gradients, ctc, rvq, forward-moments, gaussian-sampler.
std::vector<SuiteResult> run_selfcheck(const SelfcheckOptions& opt = {});

}  // namespace cantus::app
