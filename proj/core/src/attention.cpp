#include "padapt/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace padapt {

AttentionWeights AttentionWeights::random(std::size_t d_k, std::size_t d_v, std::size_t heads,
                                          Rng& rng) {
  if (heads == 0 || d_k % heads != 0 || d_v % heads != 0) {
    throw std::invalid_argument("AttentionWeights: d_k and d_v must be divisible by heads");
  }
  AttentionWeights w;
  w.heads = heads;
  const double std_k = 1.0 / std::sqrt(static_cast<double>(d_k));
  const double std_v = 1.0 / std::sqrt(static_cast<double>(d_v));
  for (std::size_t h = 0; h < heads; ++h) {
    w.w_q.push_back(rng.normal_matrix(d_k, d_k / heads, std_k));
    w.w_k.push_back(rng.normal_matrix(d_k, d_k / heads, std_k));
    w.w_v.push_back(rng.normal_matrix(d_v, d_v / heads, std_v));
  }
  w.w_o = rng.normal_matrix(d_v, d_v, std_v);
  return w;
}

AttentionResult attention(const Matrix& q, const Matrix& k, const Matrix& v,
                          const AttentionWeights& weights, const BoolMatrix* mask) {
  if (q.cols() != weights.d_k() || k.cols() != weights.d_k()) {
    throw std::invalid_argument("attention: query/key width " + q.shape_str() + "/" +
                                k.shape_str() + " does not match weights d_k " +
                                std::to_string(weights.d_k()));
  }
  if (v.cols() != weights.d_v() || k.rows() != v.rows()) {
    throw std::invalid_argument("attention: key/value shapes " + k.shape_str() + "/" +
                                v.shape_str() + " inconsistent");
  }
  const std::size_t n = weights.heads;
  const double head_scale = 1.0 / std::sqrt(static_cast<double>(weights.d_k() / n));

  AttentionIntermediate inter;
  inter.w_o = weights.w_o;
  if (mask != nullptr) inter.mask = *mask;

  std::vector<Matrix> q_blocks, v_blocks, head_outputs;
  Matrix avg(q.rows(), k.rows());
  for (std::size_t h = 0; h < n; ++h) {
    Matrix qh = matmul(q, weights.w_q[h]);
    Matrix kh = matmul(k, weights.w_k[h]);
    Matrix vh = matmul(v, weights.w_v[h]);
    Matrix attn = row_softmax(matmul(qh, transpose(kh)), head_scale, mask);
    head_outputs.push_back(matmul(attn, vh));
    avg = add(avg, attn);
    inter.head_attn.push_back(std::move(attn));
    q_blocks.push_back(std::move(qh));
    v_blocks.push_back(std::move(vh));
  }
  inter.attn_avg = scale(avg, 1.0 / static_cast<double>(n));
  inter.q_proj = concat_cols(q_blocks);
  inter.v_proj = concat_cols(v_blocks);

  AttentionResult result;
  result.output = matmul(concat_cols(head_outputs), weights.w_o);
  result.intermediate = std::move(inter);
  return result;
}

Matrix averaged_attention_output(const AttentionIntermediate& inter) {
  return matmul(matmul(inter.attn_avg, inter.v_proj), inter.w_o);
}

AugmentedAttention augment(const AttentionIntermediate& inter, ConcatMode mode, Rng* rng) {
  const std::size_t n1 = inter.n_query();
  Matrix query_block;
  switch (mode) {
    case ConcatMode::kQuery:
      query_block = inter.q_proj;
      break;
    case ConcatMode::kZero:
      query_block = Matrix(n1, inter.v_proj.cols());
      break;
    case ConcatMode::kNoise:
      if (rng == nullptr) throw std::invalid_argument("augment: noise mode needs an rng");
      query_block = rng->normal_matrix(n1, inter.v_proj.cols());
      break;
  }
  return augment_with_query_block(inter, std::move(query_block), mode);
}

AugmentedAttention augment_with_query_block(const AttentionIntermediate& inter,
                                            Matrix query_block, ConcatMode mode) {
  const std::size_t n1 = inter.n_query();
  const std::size_t n2 = inter.n_value();
  if (inter.q_proj.cols() != inter.v_proj.cols()) {
    throw std::invalid_argument("augment: query block width " +
                                std::to_string(inter.q_proj.cols()) +
                                " != value block width " +
                                std::to_string(inter.v_proj.cols()));
  }
  if (query_block.rows() != n1 || query_block.cols() != inter.v_proj.cols()) {
    throw std::invalid_argument("augment: query block " + query_block.shape_str() +
                                " must be " + std::to_string(n1) + "x" +
                                std::to_string(inter.v_proj.cols()));
  }
  AugmentedAttention aug;
  aug.n_query = n1;
  aug.n_value = n2;
  aug.mode = mode;
  aug.v_tilde = concat_rows(query_block, inter.v_proj);

  const std::size_t total = n1 + n2;
  aug.m_tilde = Matrix(total, total);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      aug.m_tilde(i, n1 + j) = inter.attn_avg(i, j);
      aug.m_tilde(n1 + j, i) = inter.attn_avg(i, j);
    }
  }
  aug.v_hat = matmul(aug.v_tilde, inter.w_o);
  return aug;
}

BoolMatrix causal_mask(std::size_t n) {
  if (n == 0) throw std::invalid_argument("causal_mask: n must be >= 1");
  BoolMatrix m(n, n, false);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m.set(i, j, true);
  return m;
}

}  // namespace padapt
