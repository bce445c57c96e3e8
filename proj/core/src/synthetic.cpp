#include "padapt/synthetic.hpp"

#include "padapt/rng.hpp"

namespace padapt {

AttentionGraph make_two_cluster_graph(std::size_t n_query, std::size_t n_value, std::size_t dim,
                                      double separation, std::uint64_t seed) {
  Rng rng(seed);
  Matrix features(n_query + n_value, dim);
  for (std::size_t i = 0; i < n_query + n_value; ++i) {
    const double mean = i < n_query ? separation : -separation;
    for (std::size_t k = 0; k < dim; ++k) features(i, k) = mean + rng.normal();
  }
  const Matrix attn = row_softmax(rng.normal_matrix(n_query, n_value), 1.0);
  const std::size_t total = n_query + n_value;
  Matrix adjacency(total, total);
  for (std::size_t i = 0; i < n_query; ++i)
    for (std::size_t j = 0; j < n_value; ++j) {
      adjacency(i, n_query + j) = attn(i, j);
      adjacency(n_query + j, i) = attn(i, j);
    }
  return graph_from_adjacency(std::move(adjacency), std::move(features), n_query);
}

AttentionGraph make_random_graph(std::size_t nodes, std::size_t dim, double density,
                                 std::uint64_t seed) {
  Rng rng(seed);
  Matrix adjacency(nodes, nodes);
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = i + 1; j < nodes; ++j) {
      if (rng.uniform() < density) {
        const double w = rng.uniform(0.1, 1.0);
        adjacency(i, j) = w;
        adjacency(j, i) = w;
      }
    }
  // No isolated nodes: zero degrees would engage the clamp and leave the
  // operator identities (closed-form p=2 step, Laplacian row sums) outside
  // their domain.
  for (std::size_t i = 0; i < nodes; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < nodes; ++j) degree += adjacency(i, j);
    if (degree == 0.0) {
      std::size_t j = rng.uniform_int(nodes - 1);
      if (j >= i) ++j;
      const double w = rng.uniform(0.1, 1.0);
      adjacency(i, j) = w;
      adjacency(j, i) = w;
    }
  }
  Matrix features = rng.normal_matrix(nodes, dim);
  return graph_from_adjacency(std::move(adjacency), std::move(features), nodes / 2);
}

}  // namespace padapt
