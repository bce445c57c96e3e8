#include "padapt/message_passing.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace padapt {

namespace testing {
double& p_normalize_fault_scale() {
  static double scale = 1.0;
  return scale;
}
}  // namespace testing

Matrix gcn_propagate(const Matrix& c, const Matrix& x, const Matrix& w,
                     const std::function<double(double)>& activation) {
  Matrix out = matmul(matmul(c, x), w);
  if (activation) {
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = activation(out.data()[i]);
  }
  return out;
}

Matrix p_normalize(const AttentionGraph& g, const Matrix& f, double p, double eps) {
  if (p < 1.0) throw std::invalid_argument("p_normalize: p must be >= 1");
  const std::size_t n = g.node_count();
  if (f.rows() != n) {
    throw std::invalid_argument("p_normalize: feature rows " + f.shape_str() +
                                " do not match node count " + std::to_string(n));
  }
  Matrix m_bar(n, n);
  const double exponent = p - 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = g.adjacency(i, j);
      if (a == 0.0) continue;
      const double wi = std::sqrt(a / g.degrees[i]);
      const double wj = std::sqrt(a / g.degrees[j]);
      double norm_sq = 0.0;
      for (std::size_t k = 0; k < f.cols(); ++k) {
        const double c = wi * f(i, k) - wj * f(j, k);
        norm_sq += c * c;
      }
      m_bar(i, j) = a * clamped_pow(std::sqrt(norm_sq), exponent, eps);
    }
  }
  const double fault = testing::p_normalize_fault_scale();
  if (fault != 1.0) m_bar = scale(m_bar, fault);
  ensure_finite(m_bar, "p_normalize");
  return m_bar;
}

AlphaBeta alpha_beta(const Matrix& m_bar, const std::vector<double>& degrees, double p,
                     double mu) {
  if (m_bar.rows() != degrees.size()) {
    throw std::invalid_argument("alpha_beta: degree count " + std::to_string(degrees.size()) +
                                " does not match " + m_bar.shape_str());
  }
  const double ratio = 2.0 * mu / p;
  AlphaBeta ab;
  ab.alpha.resize(m_bar.rows());
  ab.beta.resize(m_bar.rows());
  for (std::size_t i = 0; i < m_bar.rows(); ++i) {
    double rowsum = 0.0;
    for (std::size_t j = 0; j < m_bar.cols(); ++j) rowsum += m_bar(i, j);
    ab.alpha[i] = 1.0 / (rowsum / degrees[i] + ratio);
    ab.beta[i] = ratio * ab.alpha[i];
  }
  return ab;
}

Matrix p_step(const AttentionGraph& g, const Matrix& x_anchor, const Matrix& f,
              const PLaplacianConfig& cfg) {
  const std::size_t n = g.node_count();
  if (x_anchor.rows() != n || f.rows() != n || x_anchor.cols() != f.cols()) {
    throw std::invalid_argument("p_step: shapes " + x_anchor.shape_str() + " / " +
                                f.shape_str() + " do not fit a " + std::to_string(n) +
                                "-node graph");
  }
  const Matrix m_bar = p_normalize(g, f, cfg.p, cfg.eps);
  const AlphaBeta ab = alpha_beta(m_bar, g.degrees, cfg.p, cfg.mu);

  Matrix out(n, f.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const double scale_i = ab.alpha[i] / std::sqrt(g.degrees[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double m = m_bar(i, j);
      if (m == 0.0) continue;
      const double w = scale_i * m / std::sqrt(g.degrees[j]);
      for (std::size_t k = 0; k < f.cols(); ++k) out(i, k) += w * f(j, k);
    }
    for (std::size_t k = 0; k < f.cols(); ++k) out(i, k) += ab.beta[i] * x_anchor(i, k);
  }
  return out;
}

SolveResult p_solve(const AttentionGraph& g, const Matrix& x, const PLaplacianConfig& cfg) {
  SolveResult result;
  Matrix f = x;
  result.objective_trace.push_back(regularization_objective(g, f, x, cfg.p, cfg.mu));
  for (std::size_t iter = 1; iter <= cfg.max_iter; ++iter) {
    Matrix next = p_step(g, x, f, cfg);
    if (!all_finite(next)) {
      throw std::runtime_error("p_solve: non-finite iterate at iteration " +
                               std::to_string(iter));
    }
    const double change = frobenius_norm(sub(next, f));
    const double base = std::max(frobenius_norm(f), 1e-30);
    f = std::move(next);
    result.objective_trace.push_back(regularization_objective(g, f, x, cfg.p, cfg.mu));
    result.iterations = iter;
    if (change / base < cfg.tol) {
      result.converged = true;
      break;
    }
  }
  const double initial = result.objective_trace.front();
  const double final_obj = result.objective_trace.back();
  if (final_obj > initial * (1.0 + 1e-12) + 1e-12) {
    throw std::runtime_error("p_solve: objective increased from " + std::to_string(initial) +
                             " to " + std::to_string(final_obj));
  }
  result.features = std::move(f);
  return result;
}

Matrix aggregate(const AggregationStrategy& strategy, const AttentionGraph& g,
                 const Matrix& x) {
  switch (strategy.kind) {
    case AggregationKind::kGcn:
      return matmul(normalized_adjacency(g), x);
    case AggregationKind::kAppnp: {
      const Matrix s = normalized_adjacency(g);
      Matrix z = x;
      for (std::size_t k = 0; k < strategy.power_steps; ++k) {
        z = add(scale(matmul(s, z), 1.0 - strategy.teleport), scale(x, strategy.teleport));
      }
      return z;
    }
    case AggregationKind::kGcnii: {
      const Matrix s = normalized_adjacency(g);
      return add(scale(matmul(s, x), 1.0 - strategy.gcnii_alpha),
                 scale(x, strategy.gcnii_alpha));
    }
    case AggregationKind::kPLaplacian:
      return p_step(g, x, x, strategy.plap);
  }
  throw std::invalid_argument("aggregate: unknown aggregation kind");
}

}  // namespace padapt
