#pragma once

#include <vector>

#include "padapt/attention.hpp"
#include "padapt/matrix.hpp"

namespace padapt {

// Undirected weighted graph built from an augmented attention matrix.
// Query nodes come first (indices [0, n_query)), value nodes after.
struct AttentionGraph {
  Matrix adjacency;              // N x N, symmetric, nonnegative
  Matrix features;               // N x d
  std::vector<double> degrees;   // row sums, clamped below at eps_deg
  std::size_t n_query = 0;
  std::size_t n_value = 0;

  std::size_t node_count() const { return adjacency.rows(); }
};

// Edge tensor with one d-vector per ordered node pair; zero off the edge set.
struct GraphGradient {
  std::size_t nodes = 0;
  std::size_t dim = 0;
  std::vector<double> data;  // layout [i][j][k]

  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * nodes + j) * dim + k];
  }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * nodes + j) * dim + k];
  }
  double norm(std::size_t i, std::size_t j) const;
};

AttentionGraph build_graph(const AugmentedAttention& aug, double eps_deg = 1e-12);
// For synthetic graphs and tests: takes any symmetric nonnegative adjacency.
AttentionGraph graph_from_adjacency(Matrix adjacency, Matrix features, std::size_t n_query,
                                    double eps_deg = 1e-12);

// L = D - A.
Matrix laplacian(const AttentionGraph& g);
// S = D^{-1/2} A D^{-1/2}.
Matrix normalized_adjacency(const AttentionGraph& g);

// grad F[i][j] = sqrt(A_ij/D_jj) F_j - sqrt(A_ij/D_ii) F_i; antisymmetric.
GraphGradient graph_gradient(const AttentionGraph& g, const Matrix& f);

// div g(v_i) = sum_j sqrt(A_ij/D_ii) (g[i][j] - g[j][i]).
Matrix divergence(const AttentionGraph& g, const GraphGradient& edge_fn);

// Element-wise p-Laplacian:
//   (Delta_p F)_i = sum_j ||grad F[i][j]||^{p-2} (A_ij/sqrt(D_ii))
//                   (F_i/sqrt(D_ii) - F_j/sqrt(D_jj)),
// with the norm power clamped below at eps. p = 2 recovers (I - S) F.
Matrix p_laplacian_apply(const AttentionGraph& g, const Matrix& f, double p, double eps = 1e-8);

// S_p(F) = 1/2 sum_ij ||grad F[i][j]||^p (matrix form).
double variation(const AttentionGraph& g, const Matrix& f, double p);
// Same quantity summed over undirected edges; used to cross-check the
// matrix form.
double variation_edge_sum(const AttentionGraph& g, const Matrix& f, double p);

// L_p(F) = S_p(F) + mu * sum_i ||F_i - X_i||^2.
double regularization_objective(const AttentionGraph& g, const Matrix& f, const Matrix& x,
                                double p, double mu);

struct HomophilyMetrics {
  double edge_homophily = 0.0;  // adjacency-weighted mean cosine over edges
  double intra_query = 0.0;     // mean pairwise cosine within the query block
  double intra_value = 0.0;
};

HomophilyMetrics homophily_metrics(const AttentionGraph& g);

}  // namespace padapt
