#include "padapt/spectral.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace padapt {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  return m;
}

}  // namespace

SymmetricEigen symmetric_eigen(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("symmetric_eigen: matrix must be square, got " + a.shape_str());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_eigen(a));
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("symmetric_eigen: eigendecomposition failed");
  }
  SymmetricEigen out;
  const std::size_t n = a.rows();
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = solver.eigenvalues()(k);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = solver.eigenvectors()(i, k);
  }
  return out;
}

double min_eigenvalue(const Matrix& a) { return symmetric_eigen(a).values.front(); }

FrequencyEnergy frequency_energy(const AttentionGraph& g, const Matrix& f) {
  const std::size_t n = g.node_count();
  if (n > 512) {
    throw std::invalid_argument("frequency_energy: dense eigendecomposition limited to 512 "
                                "nodes, got " + std::to_string(n));
  }
  if (f.rows() != n) {
    throw std::invalid_argument("frequency_energy: signal rows " + f.shape_str() +
                                " do not match node count " + std::to_string(n));
  }
  Matrix norm_lap = scale(normalized_adjacency(g), -1.0);
  for (std::size_t i = 0; i < n; ++i) norm_lap(i, i) += 1.0;
  const SymmetricEigen eig = symmetric_eigen(norm_lap);

  // Coefficients of F in the eigenbasis; row k holds the k-th frequency.
  const Matrix coeff = matmul(transpose(eig.vectors), f);
  const std::size_t band = (n + 3) / 4;  // ceil(N/4)
  FrequencyEnergy energy;
  for (std::size_t k = 0; k < n; ++k) {
    double row_energy = 0.0;
    for (std::size_t c = 0; c < coeff.cols(); ++c) row_energy += coeff(k, c) * coeff(k, c);
    if (k < band) energy.low += row_energy;
    if (k >= n - band) energy.high += row_energy;
  }
  return energy;
}

}  // namespace padapt
