#include <bit>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "padapt/toy_model.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian float64");

namespace padapt {

namespace {

using json = nlohmann::json;

json config_to_json(const ModelConfig& cfg) {
  json j;
  j["layers"] = cfg.layers;
  j["d_model"] = cfg.d_model;
  j["heads"] = cfg.heads;
  j["ffn_hidden"] = cfg.ffn_hidden;
  j["adapter_hidden"] = cfg.adapter_hidden;
  j["vocab"] = cfg.vocab;
  j["enc_tokens"] = cfg.enc_tokens;
  j["enc_raw_dim"] = cfg.enc_raw_dim;
  j["max_seq"] = cfg.max_seq;
  j["insert_ffn"] = cfg.insert_ffn;
  j["insert_sa"] = cfg.insert_sa;
  j["insert_ca"] = cfg.insert_ca;
  j["adapter_kind"] = to_string(cfg.adapter_kind);
  j["aggregation"] = to_string(cfg.aggregation.kind);
  j["appnp_teleport"] = cfg.aggregation.teleport;
  j["appnp_steps"] = cfg.aggregation.power_steps;
  j["gcnii_alpha"] = cfg.aggregation.gcnii_alpha;
  j["gcnii_beta"] = cfg.aggregation.gcnii_beta;
  j["concat_mode"] = to_string(cfg.concat_mode);
  j["p_mode"] = to_string(cfg.p_mode);
  j["fixed_p"] = cfg.fixed_p;
  j["mu"] = cfg.mu;
  j["eps"] = cfg.eps;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.layers = j.at("layers").get<std::size_t>();
  cfg.d_model = j.at("d_model").get<std::size_t>();
  cfg.heads = j.at("heads").get<std::size_t>();
  cfg.ffn_hidden = j.at("ffn_hidden").get<std::size_t>();
  cfg.adapter_hidden = j.at("adapter_hidden").get<std::size_t>();
  cfg.vocab = j.at("vocab").get<std::size_t>();
  cfg.enc_tokens = j.at("enc_tokens").get<std::size_t>();
  cfg.enc_raw_dim = j.at("enc_raw_dim").get<std::size_t>();
  cfg.max_seq = j.at("max_seq").get<std::size_t>();
  cfg.insert_ffn = j.at("insert_ffn").get<bool>();
  cfg.insert_sa = j.at("insert_sa").get<bool>();
  cfg.insert_ca = j.at("insert_ca").get<bool>();
  cfg.adapter_kind = adapter_kind_from_string(j.at("adapter_kind").get<std::string>());
  cfg.aggregation.kind = aggregation_kind_from_string(j.at("aggregation").get<std::string>());
  cfg.aggregation.teleport = j.at("appnp_teleport").get<double>();
  cfg.aggregation.power_steps = j.at("appnp_steps").get<std::size_t>();
  cfg.aggregation.gcnii_alpha = j.at("gcnii_alpha").get<double>();
  cfg.aggregation.gcnii_beta = j.at("gcnii_beta").get<double>();
  cfg.concat_mode = concat_mode_from_string(j.at("concat_mode").get<std::string>());
  cfg.p_mode = p_mode_from_string(j.at("p_mode").get<std::string>());
  cfg.fixed_p = j.at("fixed_p").get<double>();
  cfg.mu = j.at("mu").get<double>();
  cfg.eps = j.at("eps").get<double>();
  cfg.aggregation.plap.p = cfg.fixed_p;
  cfg.aggregation.plap.mu = cfg.mu;
  cfg.aggregation.plap.eps = cfg.eps;
  return cfg;
}

// Every tensor in a stable order; this order defines the blob layout.
std::vector<std::pair<std::string, Matrix*>> all_tensors(ToyModel& model) {
  std::vector<std::pair<std::string, Matrix*>> out;
  out.emplace_back("tok_embed", &model.tok_embed);
  out.emplace_back("pos_embed", &model.pos_embed);
  out.emplace_back("w_enc", &model.w_enc);
  for (std::size_t l = 0; l < model.blocks.size(); ++l) {
    DecoderBlock& b = model.blocks[l];
    const std::string base = "block" + std::to_string(l);
    auto attn = [&](const std::string& name, AttentionWeights& w) {
      for (std::size_t h = 0; h < w.heads; ++h) {
        out.emplace_back(base + "." + name + ".w_q" + std::to_string(h), &w.w_q[h]);
        out.emplace_back(base + "." + name + ".w_k" + std::to_string(h), &w.w_k[h]);
        out.emplace_back(base + "." + name + ".w_v" + std::to_string(h), &w.w_v[h]);
      }
      out.emplace_back(base + "." + name + ".w_o", &w.w_o);
    };
    attn("sa", b.self_attn);
    attn("ca", b.cross_attn);
    out.emplace_back(base + ".ffn.w1", &b.w_ffn1);
    out.emplace_back(base + ".ffn.w2", &b.w_ffn2);
    out.emplace_back(base + ".ln1_gain", &b.ln1_gain);
    out.emplace_back(base + ".ln1_offset", &b.ln1_offset);
    out.emplace_back(base + ".ln2_gain", &b.ln2_gain);
    out.emplace_back(base + ".ln2_offset", &b.ln2_offset);
    out.emplace_back(base + ".ln3_gain", &b.ln3_gain);
    out.emplace_back(base + ".ln3_offset", &b.ln3_offset);
    if (!b.sa_noise.empty()) out.emplace_back(base + ".sa_noise", &b.sa_noise);
    if (!b.ca_noise.empty()) out.emplace_back(base + ".ca_noise", &b.ca_noise);
    auto slot = [&](const std::string& name, std::optional<AdapterSlot>& s) {
      if (!s) return;
      out.emplace_back(base + "." + name + ".w_down", &s->adapter.w_down);
      out.emplace_back(base + "." + name + ".w_up", &s->adapter.w_up);
      out.emplace_back(base + "." + name + ".rho", &s->rho);
    };
    slot("sa_slot", b.sa_slot);
    slot("ca_slot", b.ca_slot);
    slot("ffn_slot", b.ffn_slot);
  }
  out.emplace_back("ln_f_gain", &model.ln_f_gain);
  out.emplace_back("ln_f_offset", &model.ln_f_offset);
  out.emplace_back("w_vocab", &model.w_vocab);
  return out;
}

}  // namespace

void save_checkpoint(const ToyModel& model, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto tensors = all_tensors(const_cast<ToyModel&>(model));

  json manifest;
  manifest["format"] = "padapt-checkpoint-v1";
  manifest["seed"] = model.seed;
  manifest["config"] = config_to_json(model.config);
  json list = json::array();
  for (const auto& [name, tensor] : tensors) {
    list.push_back({{"name", name}, {"rows", tensor->rows()}, {"cols", tensor->cols()}});
  }
  manifest["tensors"] = list;

  std::ofstream mf(fs::path(dir) / "manifest.json");
  mf << manifest.dump(2) << "\n";

  std::ofstream bf(fs::path(dir) / "weights.bin", std::ios::binary);
  for (const auto& [name, tensor] : tensors) {
    bf.write(reinterpret_cast<const char*>(tensor->data()),
             static_cast<std::streamsize>(tensor->size() * sizeof(double)));
  }
  if (!bf) throw std::runtime_error("save_checkpoint: failed to write " + dir);
}

ToyModel load_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw std::runtime_error("load_checkpoint: cannot open manifest in " + dir);
  json manifest = json::parse(mf);
  if (manifest.value("format", "") != "padapt-checkpoint-v1") {
    throw std::runtime_error("load_checkpoint: unknown format in " + dir);
  }

  ToyModel model = build_model(config_from_json(manifest.at("config")),
                               manifest.at("seed").get<std::uint64_t>());
  auto tensors = all_tensors(model);
  const json& list = manifest.at("tensors");
  if (list.size() != tensors.size()) {
    throw std::runtime_error("load_checkpoint: manifest lists " + std::to_string(list.size()) +
                             " tensors, model has " + std::to_string(tensors.size()));
  }

  std::ifstream bf(fs::path(dir) / "weights.bin", std::ios::binary);
  if (!bf) throw std::runtime_error("load_checkpoint: cannot open weights in " + dir);
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const json& entry = list[i];
    Matrix* tensor = tensors[i].second;
    if (entry.at("name") != tensors[i].first ||
        entry.at("rows").get<std::size_t>() != tensor->rows() ||
        entry.at("cols").get<std::size_t>() != tensor->cols()) {
      throw std::runtime_error("load_checkpoint: tensor mismatch at " + tensors[i].first);
    }
    bf.read(reinterpret_cast<char*>(tensor->data()),
            static_cast<std::streamsize>(tensor->size() * sizeof(double)));
    if (!bf) throw std::runtime_error("load_checkpoint: blob truncated at " + tensors[i].first);
  }
  char extra;
  if (bf.read(&extra, 1)) {
    throw std::runtime_error("load_checkpoint: blob larger than manifest describes");
  }
  return model;
}

}  // namespace padapt
