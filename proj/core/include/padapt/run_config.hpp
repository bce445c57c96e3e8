#pragma once

#include <map>
#include <string>

#include "padapt/tasks.hpp"
#include "padapt/trainer.hpp"

namespace padapt {

// One fully specified run: model, task, optimizer, loop options. The flat
// dotted-key view is the contract for config files, --set overrides and the
// echo embedded in every report.
struct RunSetup {
  ModelConfig model;
  TaskSpec task;
  OptimizerConfig opt;
  TrainOptions train_options;
  std::uint64_t seed = 0;

  // Derives the coupled fields (encoder geometry from the task, vocab,
  // decay horizon) and validates. Call after the last override.
  void finalize();
};

RunSetup default_setup();

// Applies "section.key=value"; throws std::invalid_argument on unknown keys
// or unparsable values.
void apply_override(RunSetup& setup, const std::string& key, const std::string& value);

// Every key with its current value; parseable back via apply_override.
std::map<std::string, std::string> to_kv(const RunSetup& setup);

}  // namespace padapt
