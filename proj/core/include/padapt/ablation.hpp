#pragma once

#include <string>
#include <vector>

#include "padapt/run_config.hpp"

namespace padapt {

struct GridAxis {
  std::string key;                  // config key, e.g. "adapter.fixed_p"
  std::vector<std::string> values;
};

struct CellResult {
  std::string cell_name;  // "adapter.fixed_p=1.25,adapter.mu=0.1"
  std::string cell_dir;
  std::vector<std::pair<std::string, std::string>> overrides;
  bool ok = false;
  bool skipped = false;  // completed in a previous run
  std::string error;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double eval_loss = 0.0;
  double eval_accuracy = 0.0;
  double wall_seconds = 0.0;
};

// Runs the cartesian product of the grid axes over the base setup. Each
// cell gets its own seed (base seed + cell index), a fresh model, and its
// own subdirectory with report.json + curves.csv; cells whose report.json
// already parses are skipped, which makes interrupted runs resumable. Cell
// failures are recorded and do not stop the sweep. Writes summary.csv.
std::vector<CellResult> ablation_run(const RunSetup& base, const std::vector<GridAxis>& grid,
                                     const std::string& out_dir, std::size_t jobs = 1);

}  // namespace padapt
