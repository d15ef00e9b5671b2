#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace lowrank {

/// One CSV row per iteration. Optional fields are emitted empty when
/// diagnostics are off or not applicable.
struct TraceRow {
  std::string run_id;
  std::string method;
  std::uint64_t seed = 0;
  long iter = 0;
  double loss = 0.0;
  double resid_fro = 0.0;
  double resid_rel = 0.0;
  std::optional<double> theory_bound;
  double dist_x = 0.0;  // ||X_t - X_0||_F
  double dist_y = 0.0;
  std::optional<double> leakage;
  std::optional<double> contraction_measured;
  std::optional<double> decomposition_residual;
};

inline const char* kTraceHeader =
    "run_id,method,seed,iter,loss,resid_fro,resid_rel,theory_bound,"
    "dist_x,dist_y,leakage,contraction_measured,decomposition_residual";

}  // namespace lowrank
