#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mmwce {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Called after each check completes.
using CheckObserver = std::function<void(const CheckResult&)>;

/// Property suite behind `validate`: atomic-norm gauge properties, OMP residual
/// monotonicity, pilot Gram identity, measurement noise calibration,
/// dBm round trips, ZF construction and byte-identical reproducibility.
std::vector<CheckResult> run_invariant_suite(std::uint64_t seed, const CheckObserver& observer = {});

}  // namespace mmwce
