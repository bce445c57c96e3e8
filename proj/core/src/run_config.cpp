#include "padapt/run_config.hpp"

#include <sstream>
#include <stdexcept>

namespace padapt {

namespace {

std::size_t parse_size(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": expected integer, got '" + value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": expected number, got '" + value + "'");
  }
}

void parse_positions(ModelConfig& model, const std::string& value) {
  model.insert_ffn = model.insert_sa = model.insert_ca = false;
  std::stringstream ss(value);
  std::string part;
  while (std::getline(ss, part, '+')) {
    if (part == "ffn")
      model.insert_ffn = true;
    else if (part == "sa")
      model.insert_sa = true;
    else if (part == "ca")
      model.insert_ca = true;
    else
      throw std::invalid_argument("config key adapter.positions: unknown position '" + part +
                                  "'");
  }
}

std::string positions_string(const ModelConfig& model) {
  std::string s;
  if (model.insert_ffn) s += "ffn";
  if (model.insert_sa) s += s.empty() ? "sa" : "+sa";
  if (model.insert_ca) s += s.empty() ? "ca" : "+ca";
  return s;
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

RunSetup default_setup() {
  RunSetup s;
  s.model.adapter_hidden = s.model.d_model / 8;
  return s;
}

void RunSetup::finalize() {
  task.validate();
  model.vocab = task.vocab;
  model.enc_tokens = task.enc_rows();
  model.enc_raw_dim = task.enc_raw_dim();
  model.max_seq = task.length;
  model.aggregation.plap.p = model.fixed_p;
  model.aggregation.plap.mu = model.mu;
  model.aggregation.plap.eps = model.eps;
  opt.total_steps = train_options.steps;
  task.seed = seed + 1000003;
  train_options.seed = seed + 2000003;
  model.validate();
}

void apply_override(RunSetup& s, const std::string& key, const std::string& value) {
  if (key == "model.layers") s.model.layers = parse_size(key, value);
  else if (key == "model.d_model") s.model.d_model = parse_size(key, value);
  else if (key == "model.heads") s.model.heads = parse_size(key, value);
  else if (key == "model.ffn_hidden") s.model.ffn_hidden = parse_size(key, value);
  else if (key == "adapter.kind") s.model.adapter_kind = adapter_kind_from_string(value);
  else if (key == "adapter.hidden") s.model.adapter_hidden = parse_size(key, value);
  else if (key == "adapter.positions") parse_positions(s.model, value);
  else if (key == "adapter.p_mode") s.model.p_mode = p_mode_from_string(value);
  else if (key == "adapter.fixed_p") s.model.fixed_p = parse_real(key, value);
  else if (key == "adapter.mu") s.model.mu = parse_real(key, value);
  else if (key == "adapter.eps") s.model.eps = parse_real(key, value);
  else if (key == "adapter.concat") s.model.concat_mode = concat_mode_from_string(value);
  else if (key == "adapter.aggregation")
    s.model.aggregation.kind = aggregation_kind_from_string(value);
  else if (key == "adapter.appnp_teleport") s.model.aggregation.teleport = parse_real(key, value);
  else if (key == "adapter.appnp_steps") s.model.aggregation.power_steps = parse_size(key, value);
  else if (key == "adapter.gcnii_alpha") s.model.aggregation.gcnii_alpha = parse_real(key, value);
  else if (key == "adapter.gcnii_beta") s.model.aggregation.gcnii_beta = parse_real(key, value);
  else if (key == "task.kind") s.task.kind = task_kind_from_string(value);
  else if (key == "task.length") s.task.length = parse_size(key, value);
  else if (key == "task.vocab") s.task.vocab = parse_size(key, value);
  else if (key == "task.n_train") s.task.n_train = parse_size(key, value);
  else if (key == "task.n_eval") s.task.n_eval = parse_size(key, value);
  else if (key == "task.shift") s.task.shift = parse_size(key, value);
  else if (key == "task.n_keys") s.task.n_keys = parse_size(key, value);
  else if (key == "task.n_classes") s.task.n_classes = parse_size(key, value);
  else if (key == "optimizer.lr") s.opt.lr = parse_real(key, value);
  else if (key == "optimizer.weight_decay") s.opt.weight_decay = parse_real(key, value);
  else if (key == "optimizer.beta1") s.opt.beta1 = parse_real(key, value);
  else if (key == "optimizer.beta2") s.opt.beta2 = parse_real(key, value);
  else if (key == "optimizer.eps") s.opt.eps = parse_real(key, value);
  else if (key == "train.steps") s.train_options.steps = parse_size(key, value);
  else if (key == "train.batch") s.train_options.batch = parse_size(key, value);
  else if (key == "train.eval_every") s.train_options.eval_every = parse_size(key, value);
  else if (key == "run.seed") s.seed = parse_size(key, value);
  else throw std::invalid_argument("unknown config key: " + key);
}

std::map<std::string, std::string> to_kv(const RunSetup& s) {
  std::map<std::string, std::string> kv;
  kv["model.layers"] = std::to_string(s.model.layers);
  kv["model.d_model"] = std::to_string(s.model.d_model);
  kv["model.heads"] = std::to_string(s.model.heads);
  kv["model.ffn_hidden"] = std::to_string(s.model.ffn_hidden);
  kv["adapter.kind"] = to_string(s.model.adapter_kind);
  kv["adapter.hidden"] = std::to_string(s.model.adapter_hidden);
  kv["adapter.positions"] = positions_string(s.model);
  kv["adapter.p_mode"] = to_string(s.model.p_mode);
  kv["adapter.fixed_p"] = format_real(s.model.fixed_p);
  kv["adapter.mu"] = format_real(s.model.mu);
  kv["adapter.eps"] = format_real(s.model.eps);
  kv["adapter.concat"] = to_string(s.model.concat_mode);
  kv["adapter.aggregation"] = to_string(s.model.aggregation.kind);
  kv["adapter.appnp_teleport"] = format_real(s.model.aggregation.teleport);
  kv["adapter.appnp_steps"] = std::to_string(s.model.aggregation.power_steps);
  kv["adapter.gcnii_alpha"] = format_real(s.model.aggregation.gcnii_alpha);
  kv["adapter.gcnii_beta"] = format_real(s.model.aggregation.gcnii_beta);
  kv["task.kind"] = to_string(s.task.kind);
  kv["task.length"] = std::to_string(s.task.length);
  kv["task.vocab"] = std::to_string(s.task.vocab);
  kv["task.n_train"] = std::to_string(s.task.n_train);
  kv["task.n_eval"] = std::to_string(s.task.n_eval);
  kv["task.shift"] = std::to_string(s.task.shift);
  kv["task.n_keys"] = std::to_string(s.task.n_keys);
  kv["task.n_classes"] = std::to_string(s.task.n_classes);
  kv["optimizer.lr"] = format_real(s.opt.lr);
  kv["optimizer.weight_decay"] = format_real(s.opt.weight_decay);
  kv["optimizer.beta1"] = format_real(s.opt.beta1);
  kv["optimizer.beta2"] = format_real(s.opt.beta2);
  kv["optimizer.eps"] = format_real(s.opt.eps);
  kv["train.steps"] = std::to_string(s.train_options.steps);
  kv["train.batch"] = std::to_string(s.train_options.batch);
  kv["train.eval_every"] = std::to_string(s.train_options.eval_every);
  kv["run.seed"] = std::to_string(s.seed);
  return kv;
}

}  // namespace padapt
