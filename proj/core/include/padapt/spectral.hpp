#pragma once

#include <vector>

#include "padapt/graph.hpp"
#include "padapt/matrix.hpp"

namespace padapt {

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column k is the k-th eigenvector
};

SymmetricEigen symmetric_eigen(const Matrix& a);
double min_eigenvalue(const Matrix& a);

struct FrequencyEnergy {
  double low = 0.0;   // energy in the smallest ceil(N/4) eigenvalues of I - S
  double high = 0.0;  // energy in the largest ceil(N/4)
};

// Projects F onto the eigenbasis of the normalized Laplacian I - S and sums
// squared coefficients over the low and high bands (all feature columns).
// Band energies plus the middle band add up to ||F||_F^2.
FrequencyEnergy frequency_energy(const AttentionGraph& g, const Matrix& f);

}  // namespace padapt
