#include "padapt/adapters.hpp"

#include <cmath>
#include <stdexcept>

#include "padapt/graph.hpp"
#include "padapt/message_passing.hpp"

namespace padapt {

Matrix adapter_forward(const Matrix& u, const Adapter& a) {
  if (u.cols() != a.w_down.rows()) {
    throw std::invalid_argument("adapter_forward: input " + u.shape_str() +
                                " does not match W_down " + a.w_down.shape_str());
  }
  Matrix hidden = matmul(u, a.w_down);
  for (std::size_t i = 0; i < hidden.size(); ++i)
    hidden.data()[i] = std::max(hidden.data()[i], 0.0);
  return add(matmul(hidden, a.w_up), u);
}

Matrix adapter_after_attention(const Matrix& attn_output, const Adapter& a) {
  return adapter_forward(attn_output, a);
}

Matrix augmented_adapter_forward(const AugmentedAttention& aug, const Adapter& a) {
  return adapter_forward(matmul(aug.m_tilde, aug.v_hat), a);
}

double effective_p(const PAdapter& pa) {
  if (pa.p_mode == PMode::kFixed) return pa.fixed_p;
  return 1.0 + 1.0 / (1.0 + std::exp(-pa.rho));
}

Matrix p_adapter_forward(const AugmentedAttention& aug, const PAdapter& pa) {
  // (1) graph from the augmented attention
  const AttentionGraph g = build_graph(aug);
  ensure_finite(g.features, "p_adapter_forward stage (1) graph features");

  // (2) feature-renormalized attention
  const double p = effective_p(pa);
  const Matrix m_bar = p_normalize(g, g.features, p, pa.eps);
  ensure_finite(m_bar, "p_adapter_forward stage (2) p_normalize");

  // (3) diagonal calibration
  const AlphaBeta ab = alpha_beta(m_bar, g.degrees, p, pa.mu);

  // (4) aggregation with the fidelity residual
  const std::size_t n = g.node_count();
  Matrix u(n, g.features.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const double scale_i = ab.alpha[i] / std::sqrt(g.degrees[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double m = m_bar(i, j);
      if (m == 0.0) continue;
      const double w = scale_i * m / std::sqrt(g.degrees[j]);
      for (std::size_t k = 0; k < u.cols(); ++k) u(i, k) += w * g.features(j, k);
    }
    for (std::size_t k = 0; k < u.cols(); ++k) u(i, k) += ab.beta[i] * g.features(i, k);
  }
  ensure_finite(u, "p_adapter_forward stage (4) aggregation");

  // (5) bottleneck encoding
  const Matrix encoded = adapter_forward(u, pa.adapter);
  ensure_finite(encoded, "p_adapter_forward stage (5) adapter");

  // (6) query rows only
  return slice_rows(encoded, 0, aug.n_query);
}

ad::Var p_adapter_forward(ad::Tape& tape, const AugmentedAttention& aug, const PAdapter& pa,
                          const PAdapterVars& vars) {
  const AttentionGraph g = build_graph(aug);
  ensure_finite(g.features, "p_adapter_forward stage (1) graph features");
  const std::size_t n = g.node_count();

  // Constants of the adaptation problem: adjacency, gradient norms of the
  // frozen features, and the degree scalings.
  const GraphGradient grad = graph_gradient(g, g.features);
  Matrix grad_norms(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (g.adjacency(i, j) != 0.0) grad_norms(i, j) = grad.norm(i, j);
  Matrix deg_outer(n, n);  // 1 / sqrt(D_ii D_jj)
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      deg_outer(i, j) = 1.0 / std::sqrt(g.degrees[i] * g.degrees[j]);
  Matrix inv_deg(n, 1);
  for (std::size_t i = 0; i < n; ++i) inv_deg(i, 0) = 1.0 / g.degrees[i];

  ad::Var adjacency = tape.constant(g.adjacency);
  ad::Var features = tape.constant(g.features);

  ad::Var p;
  if (pa.p_mode == PMode::kLearnable) {
    p = tape.add(tape.constant(Matrix(1, 1, 1.0)), tape.sigmoid(vars.rho));
  } else {
    p = tape.constant(Matrix(1, 1, pa.fixed_p));
  }
  ad::Var exponent = tape.sub(p, tape.constant(Matrix(1, 1, 2.0)));

  // (2) Mbar = A .* max(||grad||, eps)^(p-2)
  ad::Var powers = tape.clamped_pow(tape.constant(grad_norms), exponent, pa.eps);
  ad::Var m_bar = tape.elementwise_mul(adjacency, powers);
  ensure_finite(m_bar.value(), "p_adapter_forward stage (2) p_normalize");

  // (3) alpha = (rowsum(Mbar)/D + 2 mu / p)^{-1}, beta = (2 mu / p) alpha
  ad::Var rowsum = tape.matmul(m_bar, tape.constant(Matrix(n, 1, 1.0)));
  ad::Var ratio = tape.elementwise_mul(rowsum, tape.constant(inv_deg));
  ad::Var two_mu_over_p = tape.divide(tape.constant(Matrix(1, 1, 2.0 * pa.mu)), p);
  ad::Var shift = tape.broadcast(two_mu_over_p, n, 1);
  ad::Var alpha = tape.divide(tape.constant(Matrix(n, 1, 1.0)), tape.add(ratio, shift));
  ad::Var beta = tape.elementwise_mul(shift, alpha);

  // (4) U = alpha D^{-1/2} Mbar D^{-1/2} Vhat + beta Vhat
  ad::Var m_scaled = tape.elementwise_mul(m_bar, tape.constant(deg_outer));
  ad::Var aggregated = tape.diag_scale(alpha, tape.matmul(m_scaled, features));
  ad::Var u = tape.add(aggregated, tape.diag_scale(beta, features));
  ensure_finite(u.value(), "p_adapter_forward stage (4) aggregation");

  // (5) bottleneck with residual
  ad::Var hidden = tape.relu(tape.matmul(u, vars.w_down));
  ad::Var encoded = tape.add(tape.matmul(hidden, vars.w_up), u);
  ensure_finite(encoded.value(), "p_adapter_forward stage (5) adapter");

  // (6)
  return tape.slice_rows(encoded, 0, aug.n_query);
}

ParamCount param_count(const Adapter& a) {
  ParamCount c;
  c.trainable = a.w_down.size() + a.w_up.size();
  return c;
}

ParamCount param_count(const PAdapter& pa) {
  ParamCount c = param_count(pa.adapter);
  c.trainable += 1;  // rho
  return c;
}

}  // namespace padapt
