#include "padapt/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace padapt {

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch (" + a.shape_str() +
                              " vs " + b.shape_str() + ")");
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("Matrix: data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_str());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("Matrix::from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

std::string Matrix::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  Matrix out(a.rows(), b.cols());
  // i-k-j ordering keeps the inner loop contiguous in row-major storage.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.data() + i * a.cols();
    double* orow = out.data() + i * out.cols();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.data() + k * b.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix concat_rows(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) shape_error("concat_rows", a, b);
  Matrix out(a.rows() + b.rows(), a.cols());
  std::copy(a.data(), a.data() + a.size(), out.data());
  std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
  return out;
}

Matrix concat_cols(const std::vector<Matrix>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no blocks");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Matrix& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts.front(), p);
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const Matrix& p : parts) {
    for (std::size_t i = 0; i < rows; ++i)
      std::copy(p.data() + i * p.cols(), p.data() + (i + 1) * p.cols(),
                out.data() + i * cols + offset);
    offset += p.cols();
  }
  return out;
}

Matrix slice_rows(const Matrix& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.rows()) {
    throw std::invalid_argument("slice_rows: range [" + std::to_string(begin) + ", " +
                                std::to_string(begin + count) + ") exceeds " + a.shape_str());
  }
  Matrix out(count, a.cols());
  std::copy(a.data() + begin * a.cols(), a.data() + (begin + count) * a.cols(), out.data());
  return out;
}

Matrix slice_cols(const Matrix& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) {
    throw std::invalid_argument("slice_cols: range [" + std::to_string(begin) + ", " +
                                std::to_string(begin + count) + ") exceeds " + a.shape_str());
  }
  Matrix out(a.rows(), count);
  for (std::size_t i = 0; i < a.rows(); ++i)
    std::copy(a.data() + i * a.cols() + begin, a.data() + i * a.cols() + begin + count,
              out.data() + i * count);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_error("add", a, b);
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_error("sub", a, b);
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix elementwise_mul(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_error("elementwise_mul", a, b);
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= s;
  return out;
}

Matrix row_l2_norms(const Matrix& a) {
  Matrix out(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * a(i, j);
    out(i, 0) = std::sqrt(acc);
  }
  return out;
}

Matrix row_softmax(const Matrix& m, double scale_factor, const BoolMatrix* mask) {
  if (scale_factor <= 0.0) throw std::invalid_argument("row_softmax: scale must be positive");
  if (mask != nullptr && (mask->rows != m.rows() || mask->cols != m.cols())) {
    throw std::invalid_argument("row_softmax: mask shape " + std::to_string(mask->rows) + "x" +
                                std::to_string(mask->cols) + " does not match " + m.shape_str());
  }
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (mask != nullptr && !mask->at(i, j)) continue;
      row_max = std::max(row_max, scale_factor * m(i, j));
    }
    if (row_max == -std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("degenerate attention row");
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (mask != nullptr && !mask->at(i, j)) continue;
      const double e = std::exp(scale_factor * m(i, j) - row_max);
      out(i, j) = e;
      denom += e;
    }
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) /= denom;
    if (mask != nullptr) {
      for (std::size_t j = 0; j < m.cols(); ++j)
        if (!mask->at(i, j)) out(i, j) = 0.0;
    }
  }
  return out;
}

double clamped_pow(double x, double exponent, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("clamped_pow: eps must be positive");
  if (exponent == 0.0) return 1.0;
  return std::pow(std::max(x, eps), exponent);
}

Matrix clamped_pow(const Matrix& a, double exponent, double eps) {
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = clamped_pow(out.data()[i], exponent, eps);
  return out;
}

bool all_finite(const Matrix& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(a.data()[i])) return false;
  return true;
}

void ensure_finite(const Matrix& a, const char* context) {
  if (!all_finite(a)) {
    throw std::runtime_error(std::string(context) + ": non-finite value encountered");
  }
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_error("max_abs_diff", a, b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double frobenius_norm(const Matrix& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * a.data()[i];
  return std::sqrt(acc);
}

double sum(const Matrix& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i];
  return acc;
}

}  // namespace padapt
