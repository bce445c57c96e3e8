#pragma once

#include <functional>
#include <vector>

#include "padapt/matrix.hpp"

namespace padapt::ad {

class Tape;

// Handle to a tape node. Cheap to copy; valid for the tape's lifetime.
struct Var {
  int id = -1;
  Tape* tape = nullptr;

  bool valid() const { return id >= 0 && tape != nullptr; }
  const Matrix& value() const;
  bool requires_grad() const;
};

// Reverse-mode tape over Matrix operations. Nodes are recorded in forward
// order; a single backward pass visits them once in reverse and accumulates
// exact vector-Jacobian products. One backward per recording.
class Tape {
public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Matrix value);  // leaf that receives gradient

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var elementwise_mul(Var a, Var b);
  Var divide(Var a, Var b);
  Var relu(Var a);  // relu'(0) := 0
  Var sigmoid(Var a);
  Var transpose(Var a);
  Var row_softmax(Var a, double scale, const BoolMatrix* mask = nullptr);
  Var log_row_softmax(Var a);
  Var concat_rows(Var a, Var b);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_rows(Var a, std::size_t begin, std::size_t count);
  Var row_l2_norms(Var a);
  // base and a 1x1 exponent; constant (zero-derivative) on the clamped
  // region of the base, but always differentiable in the exponent.
  Var clamped_pow(Var base, Var exponent, double eps);
  Var broadcast(Var scalar, std::size_t rows, std::size_t cols);
  Var reduce_sum(Var a);  // 1x1
  Var diag_scale(Var v, Var a);  // scales row i of a by v(i, 0)
  Var scale(Var a, double s);
  Var layer_norm(Var a, const Matrix& gain, const Matrix& offset, double eps = 1e-6);

  // dLoss/dParam for each param; loss must be 1x1. Params not reached from
  // the loss get a zero matrix. Consumes the tape.
  std::vector<Matrix> grad(Var loss, const std::vector<Var>& params);

  const Matrix& value(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }

private:
  friend struct Var;
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::function<void(Tape&, const Matrix&)> backward;
  };

  Var make(Matrix value, bool needs_grad, std::function<void(Tape&, const Matrix&)> back);
  void accumulate(int id, const Matrix& g);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  std::size_t entries = 0;
  double tolerance = 0.0;
  bool passed = false;
};

// Central-difference check of analytic gradients. f evaluates the scalar at
// the given parameter values; relative error uses max(|a|, |b|, 1e-8) as
// denominator.
GradCheckReport check_gradients(const std::function<double(const std::vector<Matrix>&)>& f,
                                const std::vector<Matrix>& params,
                                const std::vector<Matrix>& analytic_grads, double h,
                                double tol);

}  // namespace padapt::ad
