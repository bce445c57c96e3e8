#include "padapt/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "padapt/rng.hpp"

namespace padapt {

double schedule_factor(const OptimizerConfig& cfg, std::size_t step) {
  if (cfg.total_steps == 0 || step >= cfg.total_steps) return 0.0;
  return 1.0 - static_cast<double>(step) / static_cast<double>(cfg.total_steps);
}

void adamw_step(std::vector<ParamRef>& params, const std::vector<Matrix>& grads,
                OptimizerState& state, const OptimizerConfig& cfg) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adamw_step: " + std::to_string(params.size()) +
                                " params vs " + std::to_string(grads.size()) + " grads");
  }
  if (state.first_moment.empty()) {
    for (const ParamRef& p : params) {
      state.first_moment.emplace_back(p.tensor->rows(), p.tensor->cols());
      state.second_moment.emplace_back(p.tensor->rows(), p.tensor->cols());
    }
  }
  const double lr_t = cfg.lr * schedule_factor(cfg, state.step);
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& theta = *params[p].tensor;
    if (!theta.same_shape(grads[p])) {
      throw std::invalid_argument("adamw_step: grad shape " + grads[p].shape_str() +
                                  " does not match param " + params[p].name);
    }
    Matrix& m = state.first_moment[p];
    Matrix& v = state.second_moment[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grads[p].data()[i];
      m.data()[i] = cfg.beta1 * m.data()[i] + (1.0 - cfg.beta1) * g;
      v.data()[i] = cfg.beta2 * v.data()[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m.data()[i] / bc1;
      const double v_hat = v.data()[i] / bc2;
      theta.data()[i] -= lr_t * m_hat / (std::sqrt(v_hat) + cfg.eps);
      if (params[p].decay) theta.data()[i] -= lr_t * cfg.weight_decay * theta.data()[i];
    }
  }
}

namespace {

Matrix one_hot_targets(const std::vector<int>& targets, std::size_t vocab) {
  Matrix m(targets.size(), vocab);
  for (std::size_t i = 0; i < targets.size(); ++i) m(i, targets[i]) = 1.0;
  return m;
}

double cross_entropy(const Matrix& logits, const std::vector<int>& targets) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    double row_max = logits(i, 0);
    for (std::size_t j = 1; j < logits.cols(); ++j) row_max = std::max(row_max, logits(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) denom += std::exp(logits(i, j) - row_max);
    total += row_max + std::log(denom) - logits(i, targets[i]);
  }
  return total / static_cast<double>(logits.rows());
}

}  // namespace

double sample_loss(const ToyModel& model, const Sample& sample) {
  const Matrix logits = decoder_forward(model, sample.tokens, encode(model, sample.enc_raw));
  return cross_entropy(logits, sample.targets);
}

EvalResult evaluate(const ToyModel& model, const std::vector<Sample>& samples) {
  EvalResult result;
  std::size_t correct = 0, total = 0;
  for (const Sample& s : samples) {
    const Matrix logits = decoder_forward(model, s.tokens, encode(model, s.enc_raw));
    result.loss += cross_entropy(logits, s.targets);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      std::size_t arg = 0;
      for (std::size_t j = 1; j < logits.cols(); ++j)
        if (logits(i, j) > logits(i, arg)) arg = j;
      correct += arg == static_cast<std::size_t>(s.targets[i]) ? 1 : 0;
      ++total;
    }
  }
  result.loss /= static_cast<double>(samples.size());
  result.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  return result;
}

RunReport train(ToyModel& model, const Dataset& data, const OptimizerConfig& opt,
                const TrainOptions& options) {
  std::vector<ParamRef> params = trainable_params(model);
  if (params.empty()) {
    throw std::invalid_argument("train: model has no trainable parameters");
  }
  const auto start = std::chrono::steady_clock::now();

  RunReport report;
  report.seed = options.seed;
  report.params = param_count(model);

  Rng batch_rng(options.seed);
  OptimizerState state;

  for (std::size_t step = 0; step < options.steps; ++step) {
    ad::Tape tape;
    std::map<std::string, ad::Var> var_map;
    std::vector<ad::Var> param_vars;
    for (const ParamRef& p : params) {
      ad::Var v = tape.param(*p.tensor);
      var_map.emplace(p.name, v);
      param_vars.push_back(v);
    }

    ad::Var batch_loss;
    for (std::size_t b = 0; b < options.batch; ++b) {
      const Sample& s = data.train[batch_rng.uniform_int(data.train.size())];
      ad::Var logits = decoder_forward_tape(tape, model, s.tokens,
                                            encode(model, s.enc_raw), &var_map);
      ad::Var picked = tape.elementwise_mul(
          tape.log_row_softmax(logits),
          tape.constant(one_hot_targets(s.targets, model.config.vocab)));
      ad::Var loss = tape.scale(tape.reduce_sum(picked),
                                -1.0 / static_cast<double>(s.targets.size()));
      batch_loss = b == 0 ? loss : tape.add(batch_loss, loss);
    }
    batch_loss = tape.scale(batch_loss, 1.0 / static_cast<double>(options.batch));

    const double loss_value = batch_loss.value()(0, 0);
    if (!std::isfinite(loss_value)) {
      report.diverged = true;
      break;
    }
    report.step_loss.push_back(loss_value);
    if (step == 0) report.initial_loss = loss_value;

    const std::vector<Matrix> grads = tape.grad(batch_loss, param_vars);
    adamw_step(params, grads, state, opt);
    report.steps_completed = step + 1;
    report.p_per_step.push_back(layer_effective_p(model));

    if ((step + 1) % options.eval_every == 0 || step + 1 == options.steps) {
      const EvalResult ev = evaluate(model, data.eval_set);
      report.evals.push_back({step + 1, ev.loss, ev.accuracy, layer_effective_p(model)});
    }
  }

  if (!report.step_loss.empty()) report.final_loss = report.step_loss.back();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_report(const RunReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  using json = nlohmann::json;

  json j;
  j["seed"] = report.seed;
  j["config"] = report.config_echo;
  j["steps_completed"] = report.steps_completed;
  j["diverged"] = report.diverged;
  j["initial_loss"] = report.initial_loss;
  j["final_loss"] = report.final_loss;
  j["step_loss"] = report.step_loss;
  json evals = json::array();
  for (const EvalRecord& e : report.evals) {
    evals.push_back({{"step", e.step},
                     {"loss", e.loss},
                     {"accuracy", e.accuracy},
                     {"p_per_layer", e.p_per_layer}});
  }
  j["evals"] = evals;
  j["params"] = {{"trainable", report.params.trainable},
                 {"frozen", report.params.frozen},
                 {"fraction", report.params.fraction()}};

  // The only nondeterministic values, isolated so reports can be compared
  // byte-for-byte after dropping this one key.
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  j["timing"] = {{"wall_seconds", report.wall_seconds}, {"written_at", stamp}};

  std::ofstream jf(fs::path(dir) / "report.json");
  jf << j.dump(2) << "\n";

  std::ofstream cf(fs::path(dir) / "curves.csv");
  cf << std::setprecision(17);
  const std::size_t layers = report.p_per_step.empty() ? 0 : report.p_per_step.front().size();
  cf << "step,loss,eval_loss";
  for (std::size_t l = 0; l < layers; ++l) cf << ",p_layer_" << l;
  cf << "\n";
  std::size_t eval_idx = 0;
  for (std::size_t step = 0; step < report.step_loss.size(); ++step) {
    cf << (step + 1) << "," << report.step_loss[step] << ",";
    if (eval_idx < report.evals.size() && report.evals[eval_idx].step == step + 1) {
      cf << report.evals[eval_idx].loss;
      ++eval_idx;
    }
    for (std::size_t l = 0; l < layers; ++l) {
      cf << ",";
      if (!report.p_per_step[step].empty()) cf << report.p_per_step[step][l];
    }
    cf << "\n";
  }
}

}  // namespace padapt
