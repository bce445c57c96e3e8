#pragma once

#include <cstddef>

#include "padapt/attention.hpp"
#include "padapt/autograd.hpp"
#include "padapt/matrix.hpp"

namespace padapt {

// Bottleneck module: down-projection, ReLU, up-projection, residual.
// No bias terms.
struct Adapter {
  Matrix w_down;  // l1 x l2
  Matrix w_up;    // l2 x l1

  std::size_t width() const { return w_down.rows(); }
  std::size_t hidden() const { return w_down.cols(); }
};

enum class PMode { kLearnable, kFixed };

struct PAdapter {
  Adapter adapter;
  double rho = 0.0;  // trainable; effective p = 1 + sigmoid(rho)
  double mu = 1.0;
  double eps = 1e-8;
  PMode p_mode = PMode::kLearnable;
  double fixed_p = 1.5;
};

// sigma(U W_down) W_up + U.
Matrix adapter_forward(const Matrix& u, const Adapter& a);

// Attention output followed by the bottleneck; attn_output is expected to be
// the M V W_v W_o path.
Matrix adapter_after_attention(const Matrix& attn_output, const Adapter& a);

// sigma(Mtilde Vhat W_down) W_up + Mtilde Vhat over the full augmented node
// set; the first n_query rows reproduce adapter_after_attention.
Matrix augmented_adapter_forward(const AugmentedAttention& aug, const Adapter& a);

double effective_p(const PAdapter& pa);

// Full p-adapter: renormalize the augmented attention with the effective p,
// aggregate Vhat with the calibrated matrix plus the fidelity residual, run
// the bottleneck, return the query rows. Value-only route.
Matrix p_adapter_forward(const AugmentedAttention& aug, const PAdapter& pa);

// Tape-bound trainable leaves of one p-adapter.
struct PAdapterVars {
  ad::Var w_down;
  ad::Var w_up;
  ad::Var rho;  // 1x1; ignored in fixed mode
};

// Same computation recorded on a tape. The graph quantities (Mtilde, Vhat,
// degrees, gradient norms) enter as constants; gradients reach only w_down,
// w_up and rho.
ad::Var p_adapter_forward(ad::Tape& tape, const AugmentedAttention& aug, const PAdapter& pa,
                          const PAdapterVars& vars);

struct ParamCount {
  std::size_t trainable = 0;
  std::size_t frozen = 0;
  double fraction() const {
    const std::size_t total = trainable + frozen;
    return total == 0 ? 0.0 : static_cast<double>(trainable) / static_cast<double>(total);
  }
};

ParamCount param_count(const Adapter& a);
ParamCount param_count(const PAdapter& pa);

}  // namespace padapt
