#pragma once

#include <functional>
#include <vector>

#include "padapt/graph.hpp"
#include "padapt/matrix.hpp"

namespace padapt {

struct PLaplacianConfig {
  double p = 1.5;
  double mu = 1.0;
  double eps = 1e-8;        // gradient-norm clamp before the p-2 power
  std::size_t max_iter = 200;
  double tol = 1e-6;        // relative Frobenius change stop
};

enum class AggregationKind { kGcn, kAppnp, kGcnii, kPLaplacian };

struct AggregationStrategy {
  AggregationKind kind = AggregationKind::kPLaplacian;
  double teleport = 0.1;      // APPNP alpha_t
  std::size_t power_steps = 2;  // APPNP K
  double gcnii_alpha = 0.1;
  double gcnii_beta = 0.5;    // identity mix applied by the adapter caller
  PLaplacianConfig plap;
};

// sigma(C X W). C is the aggregation matrix; the caller picks its spectral
// behavior.
Matrix gcn_propagate(const Matrix& c, const Matrix& x, const Matrix& w,
                     const std::function<double(double)>& activation);

// Feature-renormalized adjacency: entry (i,j) carries A_ij times the clamped
// (p-2)-power of the graph gradient norm between i and j. Identity at p = 2.
Matrix p_normalize(const AttentionGraph& g, const Matrix& f, double p, double eps = 1e-8);

struct AlphaBeta {
  std::vector<double> alpha;
  std::vector<double> beta;
};

// alpha_ii = (sum_j Mbar_ij / D_ii + 2 mu / p)^{-1}, beta_ii = (2 mu / p) alpha_ii.
AlphaBeta alpha_beta(const Matrix& m_bar, const std::vector<double>& degrees, double p,
                     double mu);

// One propagation step: alpha D^{-1/2} Mbar D^{-1/2} F + beta X_anchor, with
// Mbar renormalized from the current F.
Matrix p_step(const AttentionGraph& g, const Matrix& x_anchor, const Matrix& f,
              const PLaplacianConfig& cfg);

struct SolveResult {
  Matrix features;
  std::vector<double> objective_trace;  // L_p at start and after each iteration
  std::size_t iterations = 0;
  bool converged = false;
};

// Fixed-point iteration from F0 = X until the relative Frobenius change
// drops below cfg.tol or max_iter is reached.
SolveResult p_solve(const AttentionGraph& g, const Matrix& x, const PLaplacianConfig& cfg);

Matrix aggregate(const AggregationStrategy& strategy, const AttentionGraph& g,
                 const Matrix& x);

namespace testing {
// Scales the output of p_normalize; 1.0 in normal operation. Exists so the
// verification command can demonstrate that a broken invariant is caught.
double& p_normalize_fault_scale();
}  // namespace testing

}  // namespace padapt
