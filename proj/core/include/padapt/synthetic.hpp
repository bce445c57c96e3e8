#pragma once

#include <cstdint>

#include "padapt/graph.hpp"

namespace padapt {

// Bipartite attention graph with two well-separated feature clusters:
// query features around +separation * 1, value features around -separation
// * 1, unit Gaussian noise. Adjacency rows are softmaxed random logits, so
// the query block is row-stochastic like real attention.
AttentionGraph make_two_cluster_graph(std::size_t n_query, std::size_t n_value, std::size_t dim,
                                      double separation, std::uint64_t seed);

// Symmetric nonnegative adjacency with Gaussian features; general-purpose
// random graph for operator tests. density in (0, 1].
AttentionGraph make_random_graph(std::size_t nodes, std::size_t dim, double density,
                                 std::uint64_t seed);

}  // namespace padapt
