#pragma once

#include <cstdint>
#include <vector>

#include "radf/forest.hpp"

namespace radf::gradcheck {

// Compares the analytic backward pass against central finite differences of
// the same batch loss over randomized small configurations (trees <= 3,
// depth <= 4, features <= 8, response width <= 3, batch <= 8, all loss
// kinds; MAE targets are kept away from the kinks).
struct GradCheckOptions {
  std::uint64_t seed = 1;
  std::size_t cases = 50;
  double step = 1e-5;
  double rel_tol = 1e-5;
  double abs_tol = 1e-8;
  bool inject_error = false;  // self-test hook: corrupts one analytic gradient
};

struct GradCheckReport {
  bool pass = false;
  double max_rel_err = 0.0;   // worst coordinate over all cases
  std::uint64_t worst_seed = 0;
  std::size_t cases_run = 0;
};

// Flattens (weights, thresholds, bank) of one random configuration, runs
// backward once and finite_diff_grad once, and records the worst scaled
// error |analytic - numeric| / max(|analytic|, |numeric|, abs_tol/rel_tol).
GradCheckReport run_gradcheck(const GradCheckOptions& options);

}  // namespace radf::gradcheck
