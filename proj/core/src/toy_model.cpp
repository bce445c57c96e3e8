#include "padapt/toy_model.hpp"

#include <cmath>
#include <stdexcept>

#include "padapt/graph.hpp"

namespace padapt {

std::string to_string(AdapterKind kind) {
  switch (kind) {
    case AdapterKind::kNone: return "none";
    case AdapterKind::kAdapter: return "adapter";
    case AdapterKind::kPAdapter: return "p_adapter";
  }
  return "?";
}

std::string to_string(ConcatMode mode) {
  switch (mode) {
    case ConcatMode::kQuery: return "query";
    case ConcatMode::kZero: return "zero";
    case ConcatMode::kNoise: return "noise";
  }
  return "?";
}

std::string to_string(PMode mode) {
  return mode == PMode::kLearnable ? "learnable" : "fixed";
}

std::string to_string(AggregationKind kind) {
  switch (kind) {
    case AggregationKind::kGcn: return "gcn";
    case AggregationKind::kAppnp: return "appnp";
    case AggregationKind::kGcnii: return "gcnii";
    case AggregationKind::kPLaplacian: return "p_laplacian";
  }
  return "?";
}

AdapterKind adapter_kind_from_string(const std::string& s) {
  if (s == "none") return AdapterKind::kNone;
  if (s == "adapter") return AdapterKind::kAdapter;
  if (s == "p_adapter") return AdapterKind::kPAdapter;
  throw std::invalid_argument("unknown adapter kind: " + s);
}

ConcatMode concat_mode_from_string(const std::string& s) {
  if (s == "query") return ConcatMode::kQuery;
  if (s == "zero") return ConcatMode::kZero;
  if (s == "noise") return ConcatMode::kNoise;
  throw std::invalid_argument("unknown concat mode: " + s);
}

PMode p_mode_from_string(const std::string& s) {
  if (s == "learnable") return PMode::kLearnable;
  if (s == "fixed") return PMode::kFixed;
  throw std::invalid_argument("unknown p mode: " + s);
}

AggregationKind aggregation_kind_from_string(const std::string& s) {
  if (s == "gcn") return AggregationKind::kGcn;
  if (s == "appnp") return AggregationKind::kAppnp;
  if (s == "gcnii") return AggregationKind::kGcnii;
  if (s == "p_laplacian") return AggregationKind::kPLaplacian;
  throw std::invalid_argument("unknown aggregation kind: " + s);
}

void ModelConfig::validate() const {
  if (layers == 0) throw std::invalid_argument("config: layers must be >= 1");
  if (d_model == 0 || heads == 0 || d_model % heads != 0) {
    throw std::invalid_argument("config: d_model must be divisible by heads");
  }
  if (adapter_hidden == 0 || adapter_hidden >= d_model) {
    throw std::invalid_argument("config: adapter_hidden must be in [1, d_model)");
  }
  if (vocab < 2) throw std::invalid_argument("config: vocab must be >= 2");
  if (max_seq == 0 || enc_tokens == 0 || ffn_hidden == 0 || enc_raw_dim == 0) {
    throw std::invalid_argument("config: sizes must be >= 1");
  }
  if (adapter_kind != AdapterKind::kNone && !insert_ffn && !insert_sa && !insert_ca) {
    throw std::invalid_argument("config: at least one insertion position is required");
  }
  if (mu <= 0.0) throw std::invalid_argument("config: mu must be > 0");
  if (eps <= 0.0) throw std::invalid_argument("config: eps must be > 0");
  if (fixed_p < 1.0) throw std::invalid_argument("config: fixed_p must be >= 1");
}

namespace {

AdapterSlot make_slot(const ModelConfig& cfg, bool graph_based, Rng& rng) {
  AdapterSlot slot;
  slot.graph_based = graph_based;
  // W_up = 0 keeps the model output identical to the adapter-free model at
  // initialization (for plain slots).
  slot.adapter.w_down = rng.normal_matrix(cfg.d_model, cfg.adapter_hidden, 1e-2);
  slot.adapter.w_up = Matrix(cfg.adapter_hidden, cfg.d_model);
  return slot;
}

double slot_effective_p(const ModelConfig& cfg, const AdapterSlot& slot) {
  if (cfg.p_mode == PMode::kFixed) return cfg.fixed_p;
  return 1.0 + 1.0 / (1.0 + std::exp(-slot.rho(0, 0)));
}

PAdapter slot_p_adapter(const ModelConfig& cfg, const AdapterSlot& slot) {
  PAdapter pa;
  pa.adapter = slot.adapter;
  pa.rho = slot.rho(0, 0);
  pa.mu = cfg.mu;
  pa.eps = cfg.eps;
  pa.p_mode = cfg.p_mode;
  pa.fixed_p = cfg.fixed_p;
  return pa;
}

}  // namespace

ToyModel build_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ToyModel model;
  model.config = cfg;
  model.seed = seed;
  Rng rng(seed);
  const double std0 = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));

  model.tok_embed = rng.normal_matrix(cfg.vocab, cfg.d_model, std0);
  model.pos_embed = rng.normal_matrix(cfg.max_seq, cfg.d_model, std0);
  model.w_enc = rng.normal_matrix(cfg.enc_raw_dim, cfg.d_model, std0);

  const bool graph_slots = cfg.adapter_kind == AdapterKind::kPAdapter;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    DecoderBlock b;
    b.self_attn = AttentionWeights::random(cfg.d_model, cfg.d_model, cfg.heads, rng);
    b.cross_attn = AttentionWeights::random(cfg.d_model, cfg.d_model, cfg.heads, rng);
    b.w_ffn1 = rng.normal_matrix(cfg.d_model, cfg.ffn_hidden, std0);
    b.w_ffn2 = rng.normal_matrix(cfg.ffn_hidden, cfg.d_model, std0);
    b.ln1_gain = Matrix(1, cfg.d_model, 1.0);
    b.ln1_offset = Matrix(1, cfg.d_model);
    b.ln2_gain = Matrix(1, cfg.d_model, 1.0);
    b.ln2_offset = Matrix(1, cfg.d_model);
    b.ln3_gain = Matrix(1, cfg.d_model, 1.0);
    b.ln3_offset = Matrix(1, cfg.d_model);
    if (graph_slots && cfg.concat_mode == ConcatMode::kNoise) {
      b.sa_noise = rng.normal_matrix(cfg.max_seq, cfg.d_model);
      b.ca_noise = rng.normal_matrix(cfg.max_seq, cfg.d_model);
    }
    if (cfg.adapter_kind != AdapterKind::kNone) {
      if (cfg.insert_sa) b.sa_slot = make_slot(cfg, graph_slots, rng);
      if (cfg.insert_ca) b.ca_slot = make_slot(cfg, graph_slots, rng);
      // The FFN position always hosts a plain bottleneck; the graph
      // construction only exists after attention.
      if (cfg.insert_ffn) b.ffn_slot = make_slot(cfg, false, rng);
    }
    model.blocks.push_back(std::move(b));
  }

  model.ln_f_gain = Matrix(1, cfg.d_model, 1.0);
  model.ln_f_offset = Matrix(1, cfg.d_model);
  model.w_vocab = rng.normal_matrix(cfg.d_model, cfg.vocab, std0);
  return model;
}

namespace {

void collect_slot_params(const ModelConfig& cfg, AdapterSlot* slot, const std::string& prefix,
                         std::vector<ParamRef>& out) {
  if (slot == nullptr) return;
  out.push_back({prefix + ".w_down", &slot->adapter.w_down, true});
  out.push_back({prefix + ".w_up", &slot->adapter.w_up, true});
  if (slot->graph_based && cfg.aggregation.kind == AggregationKind::kPLaplacian &&
      cfg.p_mode == PMode::kLearnable) {
    out.push_back({prefix + ".rho", &slot->rho, false});
  }
}

}  // namespace

std::vector<ParamRef> trainable_params(ToyModel& model) {
  std::vector<ParamRef> out;
  for (std::size_t l = 0; l < model.blocks.size(); ++l) {
    const std::string base = "block" + std::to_string(l);
    DecoderBlock& b = model.blocks[l];
    collect_slot_params(model.config, b.sa_slot ? &*b.sa_slot : nullptr, base + ".sa", out);
    collect_slot_params(model.config, b.ca_slot ? &*b.ca_slot : nullptr, base + ".ca", out);
    collect_slot_params(model.config, b.ffn_slot ? &*b.ffn_slot : nullptr, base + ".ffn", out);
  }
  return out;
}

ParamCount param_count(const ToyModel& model) {
  ParamCount c;
  auto frozen = [&c](const Matrix& m) { c.frozen += m.size(); };
  frozen(model.tok_embed);
  frozen(model.pos_embed);
  frozen(model.w_enc);
  for (const DecoderBlock& b : model.blocks) {
    for (const AttentionWeights* w : {&b.self_attn, &b.cross_attn}) {
      for (const Matrix& m : w->w_q) frozen(m);
      for (const Matrix& m : w->w_k) frozen(m);
      for (const Matrix& m : w->w_v) frozen(m);
      frozen(w->w_o);
    }
    frozen(b.w_ffn1);
    frozen(b.w_ffn2);
    for (const Matrix* m : {&b.ln1_gain, &b.ln1_offset, &b.ln2_gain, &b.ln2_offset,
                            &b.ln3_gain, &b.ln3_offset}) {
      frozen(*m);
    }
    frozen(b.sa_noise);
    frozen(b.ca_noise);
  }
  frozen(model.ln_f_gain);
  frozen(model.ln_f_offset);
  frozen(model.w_vocab);

  std::vector<ParamRef> params = trainable_params(const_cast<ToyModel&>(model));
  for (const ParamRef& p : params) c.trainable += p.tensor->size();
  return c;
}

Matrix encode(const ToyModel& model, const Matrix& enc_raw) {
  if (enc_raw.cols() != model.config.enc_raw_dim) {
    throw std::invalid_argument("encode: raw feature width " + enc_raw.shape_str() +
                                " does not match enc_raw_dim " +
                                std::to_string(model.config.enc_raw_dim));
  }
  return matmul(enc_raw, model.w_enc);
}

namespace {

struct TapeAttention {
  ad::Var output;
  AttentionIntermediate inter;  // detached values for the graph construction
};

TapeAttention attention_on_tape(ad::Tape& t, ad::Var q, ad::Var k, ad::Var v,
                                const AttentionWeights& w, const BoolMatrix* mask) {
  const std::size_t heads = w.heads;
  const double head_scale = 1.0 / std::sqrt(static_cast<double>(w.d_k() / heads));
  TapeAttention ta;
  ta.inter.w_o = w.w_o;
  if (mask != nullptr) ta.inter.mask = *mask;

  std::vector<ad::Var> head_outs;
  std::vector<Matrix> q_blocks, v_blocks;
  Matrix avg;
  for (std::size_t h = 0; h < heads; ++h) {
    ad::Var qh = t.matmul(q, t.constant(w.w_q[h]));
    ad::Var kh = t.matmul(k, t.constant(w.w_k[h]));
    ad::Var vh = t.matmul(v, t.constant(w.w_v[h]));
    ad::Var attn = t.row_softmax(t.matmul(qh, t.transpose(kh)), head_scale, mask);
    head_outs.push_back(t.matmul(attn, vh));
    ta.inter.head_attn.push_back(attn.value());
    avg = h == 0 ? attn.value() : add(avg, attn.value());
    q_blocks.push_back(qh.value());
    v_blocks.push_back(vh.value());
  }
  ta.inter.attn_avg = scale(avg, 1.0 / static_cast<double>(heads));
  ta.inter.q_proj = concat_cols(q_blocks);
  ta.inter.v_proj = concat_cols(v_blocks);
  ta.output = t.matmul(t.concat_cols(head_outs), t.constant(w.w_o));
  return ta;
}

ad::Var fetch(ad::Tape& t, const std::map<std::string, ad::Var>* vars, const std::string& name,
              const Matrix& value) {
  if (vars != nullptr) {
    auto it = vars->find(name);
    if (it != vars->end()) return it->second;
  }
  return t.constant(value);
}

ad::Var adapter_on_tape(ad::Tape& t, ad::Var u, ad::Var w_down, ad::Var w_up) {
  ad::Var hidden = t.relu(t.matmul(u, w_down));
  return t.add(t.matmul(hidden, w_up), u);
}

AugmentedAttention slot_augment(const ModelConfig& cfg, const DecoderBlock& block,
                                AttnSite site, const AttentionIntermediate& inter) {
  if (cfg.concat_mode == ConcatMode::kNoise) {
    const Matrix& buffer = site == AttnSite::kSa ? block.sa_noise : block.ca_noise;
    return augment_with_query_block(inter, slice_rows(buffer, 0, inter.n_query()),
                                    ConcatMode::kNoise);
  }
  return augment(inter, cfg.concat_mode);
}

// Graph-based slot: aggregate the augmented node features, encode with the
// bottleneck, return the query rows. Replaces the attention output.
ad::Var graph_slot_forward(ad::Tape& t, const ModelConfig& cfg, const DecoderBlock& block,
                           const AdapterSlot& slot, const std::string& prefix, AttnSite site,
                           const AttentionIntermediate& inter,
                           const std::map<std::string, ad::Var>* vars) {
  const AugmentedAttention aug = slot_augment(cfg, block, site, inter);
  ad::Var w_down = fetch(t, vars, prefix + ".w_down", slot.adapter.w_down);
  ad::Var w_up = fetch(t, vars, prefix + ".w_up", slot.adapter.w_up);

  if (cfg.aggregation.kind == AggregationKind::kPLaplacian) {
    PAdapter pa = slot_p_adapter(cfg, slot);
    PAdapterVars pv{w_down, w_up, fetch(t, vars, prefix + ".rho", slot.rho)};
    return p_adapter_forward(t, aug, pa, pv);
  }

  const AttentionGraph g = build_graph(aug);
  ad::Var u = t.constant(aggregate(cfg.aggregation, g, g.features));
  if (cfg.aggregation.kind == AggregationKind::kGcnii) {
    // GCNII-style identity mix on the down projection.
    Matrix eye(cfg.d_model, cfg.adapter_hidden);
    for (std::size_t i = 0; i < std::min(cfg.d_model, cfg.adapter_hidden); ++i) eye(i, i) = 1.0;
    w_down = t.add(t.scale(t.constant(eye), 1.0 - cfg.aggregation.gcnii_beta),
                   t.scale(w_down, cfg.aggregation.gcnii_beta));
  }
  ad::Var encoded = adapter_on_tape(t, u, w_down, w_up);
  return t.slice_rows(encoded, 0, aug.n_query);
}

}  // namespace

ad::Var decoder_forward_tape(ad::Tape& tape, const ToyModel& model,
                             const std::vector<int>& tokens, const Matrix& enc_features,
                             const std::map<std::string, ad::Var>* vars, AttentionDump* dump,
                             std::size_t dump_layer, AttnSite dump_site) {
  const ModelConfig& cfg = model.config;
  if (tokens.empty() || tokens.size() > cfg.max_seq) {
    throw std::invalid_argument("decoder_forward: sequence length " +
                                std::to_string(tokens.size()) + " out of range [1, " +
                                std::to_string(cfg.max_seq) + "]");
  }
  for (int id : tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab) {
      throw std::invalid_argument("decoder_forward: token id " + std::to_string(id) +
                                  " out of range (vocab " + std::to_string(cfg.vocab) + ")");
    }
  }
  if (enc_features.cols() != cfg.d_model) {
    throw std::invalid_argument("decoder_forward: encoder features " +
                                enc_features.shape_str() + " must have width " +
                                std::to_string(cfg.d_model));
  }
  if (dump != nullptr && dump_layer >= cfg.layers) {
    throw std::invalid_argument("decoder_forward: dump layer " + std::to_string(dump_layer) +
                                " out of range");
  }

  const std::size_t n = tokens.size();
  Matrix x0(n, cfg.d_model);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < cfg.d_model; ++j)
      x0(i, j) = model.tok_embed(tokens[i], j) + model.pos_embed(i, j);

  ad::Var x = tape.constant(std::move(x0));
  ad::Var enc = tape.constant(enc_features);
  const BoolMatrix mask = causal_mask(n);

  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const DecoderBlock& b = model.blocks[l];
    const std::string base = "block" + std::to_string(l);

    for (AttnSite site : {AttnSite::kSa, AttnSite::kCa}) {
      const bool is_sa = site == AttnSite::kSa;
      ad::Var x_ln = tape.layer_norm(x, is_sa ? b.ln1_gain : b.ln2_gain,
                                     is_sa ? b.ln1_offset : b.ln2_offset);
      TapeAttention ta = is_sa
          ? attention_on_tape(tape, x_ln, x_ln, x_ln, b.self_attn, &mask)
          : attention_on_tape(tape, x_ln, enc, enc, b.cross_attn, nullptr);
      const auto& slot = is_sa ? b.sa_slot : b.ca_slot;
      const std::string prefix = base + (is_sa ? ".sa" : ".ca");

      if (dump != nullptr && l == dump_layer && site == dump_site) {
        dump->m = ta.inter.attn_avg;
        if (slot && slot->graph_based &&
            cfg.aggregation.kind == AggregationKind::kPLaplacian) {
          const AugmentedAttention aug = slot_augment(cfg, b, site, ta.inter);
          const AttentionGraph g = build_graph(aug);
          const Matrix m_bar =
              p_normalize(g, g.features, slot_effective_p(cfg, *slot), cfg.eps);
          Matrix block_view(aug.n_query, aug.n_value);
          for (std::size_t i = 0; i < aug.n_query; ++i)
            for (std::size_t j = 0; j < aug.n_value; ++j)
              block_view(i, j) = m_bar(i, aug.n_query + j);
          dump->m_bar = std::move(block_view);
        }
      }

      ad::Var sub = ta.output;
      if (slot) {
        if (slot->graph_based) {
          sub = graph_slot_forward(tape, cfg, b, *slot, prefix, site, ta.inter, vars);
        } else {
          sub = adapter_on_tape(tape, sub, fetch(tape, vars, prefix + ".w_down", slot->adapter.w_down),
                                fetch(tape, vars, prefix + ".w_up", slot->adapter.w_up));
        }
      }
      x = tape.add(x, sub);
    }

    ad::Var x_ln = tape.layer_norm(x, b.ln3_gain, b.ln3_offset);
    ad::Var h = tape.matmul(tape.relu(tape.matmul(x_ln, tape.constant(b.w_ffn1))),
                            tape.constant(b.w_ffn2));
    if (b.ffn_slot) {
      h = adapter_on_tape(tape, h,
                          fetch(tape, vars, base + ".ffn.w_down", b.ffn_slot->adapter.w_down),
                          fetch(tape, vars, base + ".ffn.w_up", b.ffn_slot->adapter.w_up));
    }
    x = tape.add(x, h);
  }

  ad::Var x_ln = tape.layer_norm(x, model.ln_f_gain, model.ln_f_offset);
  return tape.matmul(x_ln, tape.constant(model.w_vocab));
}

Matrix decoder_forward(const ToyModel& model, const std::vector<int>& tokens,
                       const Matrix& enc_features) {
  ad::Tape tape;
  return decoder_forward_tape(tape, model, tokens, enc_features).value();
}

AttentionDump dump_attention(const ToyModel& model, const std::vector<int>& tokens,
                             const Matrix& enc_features, std::size_t layer, AttnSite which) {
  if (layer >= model.config.layers) {
    throw std::invalid_argument("dump_attention: layer " + std::to_string(layer) +
                                " out of range (layers " +
                                std::to_string(model.config.layers) + ")");
  }
  AttentionDump dump;
  ad::Tape tape;
  decoder_forward_tape(tape, model, tokens, enc_features, nullptr, &dump, layer, which);
  return dump;
}

std::vector<double> layer_effective_p(const ToyModel& model) {
  const ModelConfig& cfg = model.config;
  if (cfg.adapter_kind != AdapterKind::kPAdapter ||
      cfg.aggregation.kind != AggregationKind::kPLaplacian) {
    return {};
  }
  std::vector<double> out;
  bool any = false;
  for (const DecoderBlock& b : model.blocks) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& slot : {b.sa_slot, b.ca_slot}) {
      if (slot && slot->graph_based) {
        acc += slot_effective_p(cfg, *slot);
        ++count;
      }
    }
    any = any || count > 0;
    out.push_back(count > 0 ? acc / static_cast<double>(count) : 0.0);
  }
  return any ? out : std::vector<double>{};
}

}  // namespace padapt
