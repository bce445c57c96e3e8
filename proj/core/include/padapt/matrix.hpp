#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace padapt {

// Dense row-major matrix of doubles. The single numeric carrier used by
// every other component; graphs at this scale never warrant sparsity.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& storage() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_str() const;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Boolean mask with the same row-major layout as Matrix. true = kept.
struct BoolMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> flags;

  BoolMatrix() = default;
  BoolMatrix(std::size_t r, std::size_t c, bool fill = true)
      : rows(r), cols(c), flags(r * c, fill ? 1 : 0) {}

  bool at(std::size_t i, std::size_t j) const { return flags[i * cols + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v) { flags[i * cols + j] = v ? 1 : 0; }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

// Stacks a above b (column counts must match).
Matrix concat_rows(const Matrix& a, const Matrix& b);
// Joins blocks left-to-right (row counts must match).
Matrix concat_cols(const std::vector<Matrix>& parts);
Matrix slice_rows(const Matrix& a, std::size_t begin, std::size_t count);
Matrix slice_cols(const Matrix& a, std::size_t begin, std::size_t count);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix elementwise_mul(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

// Column vector (n x 1) of per-row Euclidean norms.
Matrix row_l2_norms(const Matrix& a);

// Row-wise softmax of (scale * m) with per-row max subtraction. Masked-out
// entries are exactly zero in the output. A fully masked row is an error
// ("degenerate attention row").
Matrix row_softmax(const Matrix& m, double scale, const BoolMatrix* mask = nullptr);

// max(x, eps)^exponent with the convention that exponent == 0 returns
// exactly 1. Keeps p-normalization finite when gradient norms vanish.
double clamped_pow(double x, double exponent, double eps);
Matrix clamped_pow(const Matrix& a, double exponent, double eps);

bool all_finite(const Matrix& a);
void ensure_finite(const Matrix& a, const char* context);

double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);
double sum(const Matrix& a);

}  // namespace padapt
