#pragma once

#include <string>
#include <vector>

namespace padapt {

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::string details;
  double seconds = 0.0;
};

// Runs every invariant suite whose name contains `filter` (all when empty).
// Each check is deterministic; names are stable CLI-facing identifiers.
std::vector<CheckResult> run_checks(const std::string& filter = "");
std::vector<std::string> check_names();

}  // namespace padapt
