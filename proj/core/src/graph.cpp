#include "padapt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace padapt {

namespace {

std::vector<double> clamped_degrees(const Matrix& adjacency, double eps_deg) {
  std::vector<double> deg(adjacency.rows());
  for (std::size_t i = 0; i < adjacency.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < adjacency.cols(); ++j) acc += adjacency(i, j);
    deg[i] = std::max(acc, eps_deg);
  }
  return deg;
}

void check_symmetric(const Matrix& a, double tol) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tol) {
        throw std::invalid_argument("graph: adjacency asymmetric at (" + std::to_string(i) +
                                    "," + std::to_string(j) + ") by " +
                                    std::to_string(std::abs(a(i, j) - a(j, i))));
      }
    }
  }
}

}  // namespace

double GraphGradient::norm(std::size_t i, std::size_t j) const {
  double acc = 0.0;
  const double* p = data.data() + (i * nodes + j) * dim;
  for (std::size_t k = 0; k < dim; ++k) acc += p[k] * p[k];
  return std::sqrt(acc);
}

AttentionGraph build_graph(const AugmentedAttention& aug, double eps_deg) {
  AttentionGraph g = graph_from_adjacency(aug.m_tilde, aug.v_hat, aug.n_query, eps_deg);
  g.n_value = aug.n_value;
  return g;
}

AttentionGraph graph_from_adjacency(Matrix adjacency, Matrix features, std::size_t n_query,
                                    double eps_deg) {
  if (adjacency.rows() != adjacency.cols()) {
    throw std::invalid_argument("graph: adjacency must be square, got " +
                                adjacency.shape_str());
  }
  if (features.rows() != adjacency.rows()) {
    throw std::invalid_argument("graph: feature rows " + features.shape_str() +
                                " do not match adjacency " + adjacency.shape_str());
  }
  check_symmetric(adjacency, 1e-12);
  AttentionGraph g;
  g.degrees = clamped_degrees(adjacency, eps_deg);
  g.adjacency = std::move(adjacency);
  g.features = std::move(features);
  g.n_query = n_query;
  g.n_value = g.adjacency.rows() - n_query;
  return g;
}

Matrix laplacian(const AttentionGraph& g) {
  Matrix l = scale(g.adjacency, -1.0);
  for (std::size_t i = 0; i < l.rows(); ++i) l(i, i) += g.degrees[i];
  return l;
}

Matrix normalized_adjacency(const AttentionGraph& g) {
  const std::size_t n = g.node_count();
  Matrix s = g.adjacency;
  for (std::size_t i = 0; i < n; ++i) {
    const double di = 1.0 / std::sqrt(g.degrees[i]);
    for (std::size_t j = 0; j < n; ++j) s(i, j) *= di / std::sqrt(g.degrees[j]);
  }
  return s;
}

GraphGradient graph_gradient(const AttentionGraph& g, const Matrix& f) {
  const std::size_t n = g.node_count();
  if (f.rows() != n) {
    throw std::invalid_argument("graph_gradient: feature rows " + f.shape_str() +
                                " do not match node count " + std::to_string(n));
  }
  GraphGradient grad;
  grad.nodes = n;
  grad.dim = f.cols();
  grad.data.assign(n * n * f.cols(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = g.adjacency(i, j);
      if (a == 0.0) continue;
      const double wj = std::sqrt(a / g.degrees[j]);
      const double wi = std::sqrt(a / g.degrees[i]);
      for (std::size_t k = 0; k < f.cols(); ++k)
        grad.at(i, j, k) = wj * f(j, k) - wi * f(i, k);
    }
  }
  return grad;
}

Matrix divergence(const AttentionGraph& g, const GraphGradient& edge_fn) {
  const std::size_t n = g.node_count();
  if (edge_fn.nodes != n) {
    throw std::invalid_argument("divergence: edge tensor has " +
                                std::to_string(edge_fn.nodes) + " nodes, graph has " +
                                std::to_string(n));
  }
  Matrix out(n, edge_fn.dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = g.adjacency(i, j);
      if (a == 0.0) continue;
      const double w = std::sqrt(a / g.degrees[i]);
      for (std::size_t k = 0; k < edge_fn.dim; ++k)
        out(i, k) += w * (edge_fn.at(i, j, k) - edge_fn.at(j, i, k));
    }
  }
  return out;
}

Matrix p_laplacian_apply(const AttentionGraph& g, const Matrix& f, double p, double eps) {
  if (p < 1.0) throw std::invalid_argument("p_laplacian_apply: p must be >= 1");
  const std::size_t n = g.node_count();
  const GraphGradient grad = graph_gradient(g, f);
  Matrix out(n, f.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const double inv_sqrt_di = 1.0 / std::sqrt(g.degrees[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double a = g.adjacency(i, j);
      if (a == 0.0) continue;
      const double weight = clamped_pow(grad.norm(i, j), p - 2.0, eps) * a * inv_sqrt_di;
      const double inv_sqrt_dj = 1.0 / std::sqrt(g.degrees[j]);
      for (std::size_t k = 0; k < f.cols(); ++k)
        out(i, k) += weight * (f(i, k) * inv_sqrt_di - f(j, k) * inv_sqrt_dj);
    }
  }
  return out;
}

double variation(const AttentionGraph& g, const Matrix& f, double p) {
  if (p < 1.0) throw std::invalid_argument("variation: p must be >= 1");
  const GraphGradient grad = graph_gradient(g, f);
  const std::size_t n = g.node_count();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (g.adjacency(i, j) == 0.0) continue;
      acc += std::pow(grad.norm(i, j), p);
    }
  return 0.5 * acc;
}

double variation_edge_sum(const AttentionGraph& g, const Matrix& f, double p) {
  const GraphGradient grad = graph_gradient(g, f);
  const std::size_t n = g.node_count();
  double acc = 0.0;
  // One term per undirected edge; matches the half of the double sum since
  // the gradient norm is orientation-invariant.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (g.adjacency(i, j) == 0.0) continue;
      acc += std::pow(grad.norm(i, j), p);
    }
  return acc;
}

double regularization_objective(const AttentionGraph& g, const Matrix& f, const Matrix& x,
                                double p, double mu) {
  if (mu < 0.0) throw std::invalid_argument("regularization_objective: mu must be >= 0");
  if (!f.same_shape(x)) {
    throw std::invalid_argument("regularization_objective: shape mismatch (" + f.shape_str() +
                                " vs " + x.shape_str() + ")");
  }
  double fidelity = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double c = f.data()[i] - x.data()[i];
    fidelity += c * c;
  }
  return variation(g, f, p) + mu * fidelity;
}

namespace {

double cosine(const Matrix& x, std::size_t i, std::size_t j) {
  double dot = 0.0, ni = 0.0, nj = 0.0;
  for (std::size_t k = 0; k < x.cols(); ++k) {
    dot += x(i, k) * x(j, k);
    ni += x(i, k) * x(i, k);
    nj += x(j, k) * x(j, k);
  }
  const double denom = std::sqrt(ni) * std::sqrt(nj);
  return denom > 1e-12 ? dot / denom : 0.0;
}

double mean_pairwise_cosine(const Matrix& x, std::size_t begin, std::size_t end) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = begin; i < end; ++i)
    for (std::size_t j = i + 1; j < end; ++j) {
      acc += cosine(x, i, j);
      ++count;
    }
  return count > 0 ? acc / static_cast<double>(count) : 1.0;
}

}  // namespace

HomophilyMetrics homophily_metrics(const AttentionGraph& g) {
  HomophilyMetrics m;
  double weighted = 0.0, total_weight = 0.0;
  const std::size_t n = g.node_count();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double a = g.adjacency(i, j);
      if (a == 0.0 || i == j) continue;
      weighted += a * cosine(g.features, i, j);
      total_weight += a;
    }
  m.edge_homophily = total_weight > 0.0 ? weighted / total_weight : 1.0;
  m.intra_query = mean_pairwise_cosine(g.features, 0, g.n_query);
  m.intra_value = mean_pairwise_cosine(g.features, g.n_query, n);
  return m;
}

}  // namespace padapt
