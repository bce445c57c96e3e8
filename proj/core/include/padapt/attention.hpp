#pragma once

#include <optional>
#include <vector>

#include "padapt/matrix.hpp"
#include "padapt/rng.hpp"

namespace padapt {

// Frozen multi-head attention weights. Per-head query/key projections are
// d_k x (d_k/n), value projections d_v x (d_v/n); the output projection is
// d_v x d_v and applies to the concatenated heads.
struct AttentionWeights {
  std::vector<Matrix> w_q;
  std::vector<Matrix> w_k;
  std::vector<Matrix> w_v;
  Matrix w_o;
  std::size_t heads = 1;

  std::size_t d_k() const { return w_q.empty() ? 0 : w_q[0].rows(); }
  std::size_t d_v() const { return w_o.rows(); }

  static AttentionWeights random(std::size_t d_k, std::size_t d_v, std::size_t heads, Rng& rng);
};

// Everything the graph construction needs from one attention evaluation:
// per-head row-stochastic attention matrices, their head average, and the
// full-width concatenated projections.
struct AttentionIntermediate {
  std::vector<Matrix> head_attn;  // each N1 x N2
  Matrix attn_avg;                // mean over heads, row-stochastic
  Matrix q_proj;                  // N1 x d_k, heads concatenated
  Matrix v_proj;                  // N2 x d_v, heads concatenated
  Matrix w_o;
  std::optional<BoolMatrix> mask;

  std::size_t n_query() const { return attn_avg.rows(); }
  std::size_t n_value() const { return attn_avg.cols(); }
};

struct AttentionResult {
  Matrix output;  // N1 x d_v
  AttentionIntermediate intermediate;
};

enum class ConcatMode { kQuery, kZero, kNoise };

// Symmetric block construction: value features stacked under the query
// block, adjacency [[0, M], [M^T, 0]].
struct AugmentedAttention {
  Matrix v_tilde;  // (N1+N2) x d
  Matrix m_tilde;  // (N1+N2) x (N1+N2), symmetric, zero diagonal blocks
  Matrix v_hat;    // v_tilde * w_o
  std::size_t n_query = 0;
  std::size_t n_value = 0;
  ConcatMode mode = ConcatMode::kQuery;
};

AttentionResult attention(const Matrix& q, const Matrix& k, const Matrix& v,
                          const AttentionWeights& weights, const BoolMatrix* mask = nullptr);

// The single-graph analog of the attention output: M_avg * (V W_v) * W_o.
// Identical to attention().output when heads == 1.
Matrix averaged_attention_output(const AttentionIntermediate& inter);

// rng is only consulted for ConcatMode::kNoise.
AugmentedAttention augment(const AttentionIntermediate& inter, ConcatMode mode,
                           Rng* rng = nullptr);

// Same construction with a caller-supplied query block (e.g. a frozen noise
// buffer); block shape must be N1 x width(v_proj).
AugmentedAttention augment_with_query_block(const AttentionIntermediate& inter,
                                            Matrix query_block, ConcatMode mode);

// Lower-triangular keep-mask (position i may attend j iff j <= i).
BoolMatrix causal_mask(std::size_t n);

}  // namespace padapt
