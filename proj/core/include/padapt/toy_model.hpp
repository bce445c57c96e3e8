#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "padapt/adapters.hpp"
#include "padapt/attention.hpp"
#include "padapt/autograd.hpp"
#include "padapt/matrix.hpp"
#include "padapt/message_passing.hpp"

namespace padapt {

enum class AdapterKind { kNone, kAdapter, kPAdapter };
enum class AttnSite { kSa, kCa };

std::string to_string(AdapterKind kind);
std::string to_string(ConcatMode mode);
std::string to_string(PMode mode);
std::string to_string(AggregationKind kind);
AdapterKind adapter_kind_from_string(const std::string& s);
ConcatMode concat_mode_from_string(const std::string& s);
PMode p_mode_from_string(const std::string& s);
AggregationKind aggregation_kind_from_string(const std::string& s);

struct ModelConfig {
  std::size_t layers = 4;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t ffn_hidden = 256;
  std::size_t adapter_hidden = 8;  // d_model / 8
  std::size_t vocab = 64;
  std::size_t enc_tokens = 16;
  std::size_t enc_raw_dim = 80;
  std::size_t max_seq = 16;
  bool insert_ffn = true;
  bool insert_sa = true;
  bool insert_ca = true;
  AdapterKind adapter_kind = AdapterKind::kAdapter;
  AggregationStrategy aggregation;  // graph slots only
  ConcatMode concat_mode = ConcatMode::kQuery;
  PMode p_mode = PMode::kLearnable;
  double fixed_p = 1.5;
  double mu = 1.0;
  double eps = 1e-8;

  void validate() const;
};

// One adapter insertion point. Graph-based slots replace the attention
// output with the aggregated-and-encoded query rows; plain slots wrap the
// sublayer output. rho is stored as a 1x1 matrix so the optimizer can treat
// every trainable tensor uniformly.
struct AdapterSlot {
  bool graph_based = false;
  Adapter adapter;
  Matrix rho{1, 1, 0.0};
};

struct DecoderBlock {
  AttentionWeights self_attn;
  AttentionWeights cross_attn;
  Matrix w_ffn1, w_ffn2;
  Matrix ln1_gain, ln1_offset;
  Matrix ln2_gain, ln2_offset;
  Matrix ln3_gain, ln3_offset;
  std::optional<AdapterSlot> sa_slot, ca_slot, ffn_slot;
  Matrix sa_noise, ca_noise;  // frozen query-block padding for noise mode
};

struct ToyModel {
  ModelConfig config;
  std::uint64_t seed = 0;
  Matrix tok_embed;  // vocab x d_model
  Matrix pos_embed;  // max_seq x d_model
  Matrix w_enc;      // enc_raw_dim x d_model, frozen featurizer
  std::vector<DecoderBlock> blocks;
  Matrix ln_f_gain, ln_f_offset;
  Matrix w_vocab;  // d_model x vocab
};

// Reference to a trainable tensor inside the model. decay=false exempts it
// from weight decay (the learnable-p parameters).
struct ParamRef {
  std::string name;
  Matrix* tensor = nullptr;
  bool decay = true;
};

ToyModel build_model(const ModelConfig& cfg, std::uint64_t seed);

std::vector<ParamRef> trainable_params(ToyModel& model);
ParamCount param_count(const ToyModel& model);

// Frozen projection of raw task features into the encoder space.
Matrix encode(const ToyModel& model, const Matrix& enc_raw);

// Head-averaged attention at one site, plus the renormalized block when a
// p-Laplacian slot sits there (restricted to the query-to-value block so it
// is directly comparable with m).
struct AttentionDump {
  Matrix m;
  std::optional<Matrix> m_bar;
};

// Tape forward. `vars` maps trainable parameter names (as produced by
// trainable_params) to tape leaves; pass nullptr to run with the stored
// values as constants. Returns logits (tokens x vocab).
ad::Var decoder_forward_tape(ad::Tape& tape, const ToyModel& model,
                             const std::vector<int>& tokens, const Matrix& enc_features,
                             const std::map<std::string, ad::Var>* vars = nullptr,
                             AttentionDump* dump = nullptr, std::size_t dump_layer = 0,
                             AttnSite dump_site = AttnSite::kSa);

Matrix decoder_forward(const ToyModel& model, const std::vector<int>& tokens,
                       const Matrix& enc_features);

AttentionDump dump_attention(const ToyModel& model, const std::vector<int>& tokens,
                             const Matrix& enc_features, std::size_t layer, AttnSite which);

// Per-layer mean effective p over the layer's p-Laplacian slots; empty when
// the model has none.
std::vector<double> layer_effective_p(const ToyModel& model);

// Checkpoint: manifest.json (config + named tensor shapes) next to
// weights.bin, a flat little-endian float64 blob in manifest order.
void save_checkpoint(const ToyModel& model, const std::string& dir);
ToyModel load_checkpoint(const std::string& dir);

}  // namespace padapt
