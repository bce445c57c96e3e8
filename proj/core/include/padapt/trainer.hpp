#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "padapt/tasks.hpp"
#include "padapt/toy_model.hpp"

namespace padapt {

struct OptimizerConfig {
  double lr = 5e-4;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t total_steps = 500;  // linear decay horizon
};

struct OptimizerState {
  std::size_t step = 0;            // completed steps
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

// Linear decay factor applied to lr for the (step+1)-th update; 1 at step 0,
// reaching 0 after total_steps.
double schedule_factor(const OptimizerConfig& cfg, std::size_t step);

// Decoupled-decay update. Decay skips parameters flagged decay=false (the
// learnable-p scalars).
void adamw_step(std::vector<ParamRef>& params, const std::vector<Matrix>& grads,
                OptimizerState& state, const OptimizerConfig& cfg);

struct TrainOptions {
  std::size_t steps = 500;
  std::size_t batch = 8;
  std::size_t eval_every = 100;
  std::uint64_t seed = 0;  // batch sampling stream
};

struct EvalRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<double> p_per_layer;
};

struct RunReport {
  std::vector<double> step_loss;
  std::vector<EvalRecord> evals;
  std::vector<std::vector<double>> p_per_step;  // one row per step, layer columns
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  std::map<std::string, std::string> config_echo;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::size_t steps_completed = 0;
  ParamCount params;
};

// Cross-entropy loss of the model on one sample (next-token targets).
double sample_loss(const ToyModel& model, const Sample& sample);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};
EvalResult evaluate(const ToyModel& model, const std::vector<Sample>& samples);

// Trains the model's adapters in place. Throws if the model has no
// trainable parameters; on divergence (non-finite loss) returns the report
// accumulated so far with diverged=true.
RunReport train(ToyModel& model, const Dataset& data, const OptimizerConfig& opt,
                const TrainOptions& options);

// report.json plus curves.csv (step,loss,eval_loss,p_layer_0..L). All
// nondeterministic values live under the single "timing" key in the JSON.
void write_report(const RunReport& report, const std::string& dir);

}  // namespace padapt
