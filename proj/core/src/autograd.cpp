#include "padapt/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace padapt::ad {

const Matrix& Var::value() const { return tape->value(*this); }
bool Var::requires_grad() const { return tape->node(*this).requires_grad; }

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.tape != this || v.id >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("Tape: var does not belong to this tape");
  }
  return nodes_[v.id];
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

Var Tape::make(Matrix value, bool needs_grad, std::function<void(Tape&, const Matrix&)> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs_grad;
  n.backward = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1, this};
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  for (std::size_t i = 0; i < n.grad.size(); ++i) n.grad.data()[i] += g.data()[i];
}

Var Tape::constant(Matrix value) { return make(std::move(value), false, nullptr); }

Var Tape::param(Matrix value) { return make(std::move(value), true, nullptr); }

Var Tape::matmul(Var a, Var b) {
  Matrix out = padapt::matmul(a.value(), b.value());
  const bool req = a.requires_grad() || b.requires_grad();
  const int ia = a.id, ib = b.id;
  return make(std::move(out), req, [ia, ib](Tape& t, const Matrix& g) {
    if (t.nodes_[ia].requires_grad)
      t.accumulate(ia, padapt::matmul(g, padapt::transpose(t.nodes_[ib].value)));
    if (t.nodes_[ib].requires_grad)
      t.accumulate(ib, padapt::matmul(padapt::transpose(t.nodes_[ia].value), g));
  });
}

Var Tape::add(Var a, Var b) {
  Matrix out = padapt::add(a.value(), b.value());
  const int ia = a.id, ib = b.id;
  return make(std::move(out), a.requires_grad() || b.requires_grad(),
              [ia, ib](Tape& t, const Matrix& g) {
                t.accumulate(ia, g);
                t.accumulate(ib, g);
              });
}

Var Tape::sub(Var a, Var b) {
  Matrix out = padapt::sub(a.value(), b.value());
  const int ia = a.id, ib = b.id;
  return make(std::move(out), a.requires_grad() || b.requires_grad(),
              [ia, ib](Tape& t, const Matrix& g) {
                t.accumulate(ia, g);
                if (t.nodes_[ib].requires_grad) t.accumulate(ib, padapt::scale(g, -1.0));
              });
}

Var Tape::elementwise_mul(Var a, Var b) {
  Matrix out = padapt::elementwise_mul(a.value(), b.value());
  const int ia = a.id, ib = b.id;
  return make(std::move(out), a.requires_grad() || b.requires_grad(),
              [ia, ib](Tape& t, const Matrix& g) {
                if (t.nodes_[ia].requires_grad)
                  t.accumulate(ia, padapt::elementwise_mul(g, t.nodes_[ib].value));
                if (t.nodes_[ib].requires_grad)
                  t.accumulate(ib, padapt::elementwise_mul(g, t.nodes_[ia].value));
              });
}

Var Tape::divide(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) {
    throw std::invalid_argument("divide: shape mismatch (" + av.shape_str() + " vs " +
                                bv.shape_str() + ")");
  }
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] /= bv.data()[i];
  const int ia = a.id, ib = b.id;
  return make(std::move(out), a.requires_grad() || b.requires_grad(),
              [ia, ib](Tape& t, const Matrix& g) {
                const Matrix& bval = t.nodes_[ib].value;
                if (t.nodes_[ia].requires_grad) {
                  Matrix ga = g;
                  for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] /= bval.data()[i];
                  t.accumulate(ia, ga);
                }
                if (t.nodes_[ib].requires_grad) {
                  const Matrix& aval = t.nodes_[ia].value;
                  Matrix gb = g;
                  for (std::size_t i = 0; i < gb.size(); ++i)
                    gb.data()[i] *= -aval.data()[i] / (bval.data()[i] * bval.data()[i]);
                  t.accumulate(ib, gb);
                }
              });
}

Var Tape::relu(Var a) {
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::max(out.data()[i], 0.0);
  const int ia = a.id;
  return make(std::move(out), a.requires_grad(), [ia](Tape& t, const Matrix& g) {
    const Matrix& in = t.nodes_[ia].value;
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (in.data()[i] <= 0.0) ga.data()[i] = 0.0;
    t.accumulate(ia, ga);
  });
}

Var Tape::sigmoid(Var a) {
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = 1.0 / (1.0 + std::exp(-out.data()[i]));
  const Matrix saved = out;
  const int ia = a.id;
  return make(std::move(out), a.requires_grad(), [ia, saved](Tape& t, const Matrix& g) {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double y = saved.data()[i];
      ga.data()[i] *= y * (1.0 - y);
    }
    t.accumulate(ia, ga);
  });
}

Var Tape::transpose(Var a) {
  Matrix out = padapt::transpose(a.value());
  const int ia = a.id;
  return make(std::move(out), a.requires_grad(), [ia](Tape& t, const Matrix& g) {
    t.accumulate(ia, padapt::transpose(g));
  });
}

Var Tape::row_softmax(Var a, double scale_factor, const BoolMatrix* mask) {
  Matrix out = padapt::row_softmax(a.value(), scale_factor, mask);
  const Matrix saved = out;
  const int ia = a.id;
  return make(std::move(out), a.requires_grad(),
              [ia, saved, scale_factor](Tape& t, const Matrix& g) {
                // d/dx softmax = scale * y (g - <g, y> per row); masked
                // entries have y = 0 and thus zero gradient.
                Matrix ga(saved.rows(), saved.cols());
                for (std::size_t i = 0; i < saved.rows(); ++i) {
                  double dot = 0.0;
                  for (std::size_t j = 0; j < saved.cols(); ++j) dot += g(i, j) * saved(i, j);
                  for (std::size_t j = 0; j < saved.cols(); ++j)
                    ga(i, j) = scale_factor * saved(i, j) * (g(i, j) - dot);
                }
                t.accumulate(ia, ga);
              });
}

Var Tape::log_row_softmax(Var a) {
  const Matrix& in = a.value();
  Matrix out(in.rows(), in.cols());
  Matrix soft(in.rows(), in.cols());
  for (std::size_t i = 0; i < in.rows(); ++i) {
    double row_max = in(i, 0);
    for (std::size_t j = 1; j < in.cols(); ++j) row_max = std::max(row_max, in(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < in.cols(); ++j) denom += std::exp(in(i, j) - row_max);
    const double lse = row_max + std::log(denom);
    for (std::size_t j = 0; j < in.cols(); ++j) {
      out(i, j) = in(i, j) - lse;
      soft(i, j) = std::exp(out(i, j));
    }
  }
  const int ia = a.id;
  return make(std::move(out), a.requires_grad(), [ia, soft](Tape& t, const Matrix& g) {
    Matrix ga(soft.rows(), soft.cols());
    for (std::size_t i = 0; i < soft.rows(); ++i) {
      double rowsum = 0.0;
      for (std::size_t j = 0; j < soft.cols(); ++j) rowsum += g(i, j);
      for (std::size_t j = 0; j < soft.cols(); ++j)
        ga(i, j) = g(i, j) - soft(i, j) * rowsum;
    }
    t.accumulate(ia, ga);
  });
}

Var Tape::concat_rows(Var a, Var b) {
  Matrix out = padapt::concat_rows(a.value(), b.value());
  const int ia = a.id, ib = b.id;
  const std::size_t ra = a.value().rows();
  return make(std::move(out), a.requires_grad() || b.requires_grad(),
              [ia, ib, ra](Tape& t, const Matrix& g) {
                if (t.nodes_[ia].requires_grad)
                  t.accumulate(ia, padapt::slice_rows(g, 0, ra));
                if (t.nodes_[ib].requires_grad)
                  t.accumulate(ib, padapt::slice_rows(g, ra, g.rows() - ra));
              });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  std::vector<Matrix> values;
  values.reserve(parts.size());
  bool req = false;
  std::vector<int> ids;
  std::vector<std::size_t> widths;
  for (Var p : parts) {
    values.push_back(p.value());
    req = req || p.requires_grad();
    ids.push_back(p.id);
    widths.push_back(p.value().cols());
  }
  Matrix out = padapt::concat_cols(values);
  return make(std::move(out), req, [ids, widths](Tape& t, const Matrix& g) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.nodes_[ids[k]].requires_grad)
        t.accumulate(ids[k], padapt::slice_cols(g, offset, widths[k]));
      offset += widths[k];
    }
  });
}

Var Tape::slice_rows(Var a, std::size_t begin, std::size_t count) {
  Matrix out = padapt::slice_rows(a.value(), begin, count);
  const int ia = a.id;
  const std::size_t rows = a.value().rows(), cols = a.value().cols();
  return make(std::move(out), a.requires_grad(),
              [ia, begin, rows, cols](Tape& t, const Matrix& g) {
                Matrix ga(rows, cols);
                for (std::size_t i = 0; i < g.rows(); ++i)
                  for (std::size_t j = 0; j < cols; ++j) ga(begin + i, j) = g(i, j);
                t.accumulate(ia, ga);
              });
}

Var Tape::row_l2_norms(Var a) {
  Matrix out = padapt::row_l2_norms(a.value());
  const Matrix saved = out;
  const int ia = a.id;
  return make(std::move(out), a.requires_grad(), [ia, saved](Tape& t, const Matrix& g) {
    const Matrix& in = t.nodes_[ia].value;
    Matrix ga(in.rows(), in.cols());
    for (std::size_t i = 0; i < in.rows(); ++i) {
      const double n = saved(i, 0);
      if (n == 0.0) continue;  // subgradient 0 at the kink
      for (std::size_t j = 0; j < in.cols(); ++j) ga(i, j) = g(i, 0) * in(i, j) / n;
    }
    t.accumulate(ia, ga);
  });
}

Var Tape::clamped_pow(Var base, Var exponent, double eps) {
  if (exponent.value().size() != 1) {
    throw std::invalid_argument("clamped_pow: exponent must be 1x1, got " +
                                exponent.value().shape_str());
  }
  if (eps <= 0.0) throw std::invalid_argument("clamped_pow: eps must be positive");
  const double e = exponent.value()(0, 0);
  const Matrix& b = base.value();
  Matrix out(b.rows(), b.cols());
  for (std::size_t i = 0; i < b.size(); ++i)
    out.data()[i] = padapt::clamped_pow(b.data()[i], e, eps);
  const Matrix saved = out;
  const int ib = base.id, ie = exponent.id;
  return make(std::move(out), base.requires_grad() || exponent.requires_grad(),
              [ib, ie, saved, e, eps](Tape& t, const Matrix& g) {
                const Matrix& bval = t.nodes_[ib].value;
                if (t.nodes_[ib].requires_grad) {
                  Matrix gb(bval.rows(), bval.cols());
                  for (std::size_t i = 0; i < bval.size(); ++i) {
                    const double x = bval.data()[i];
                    if (x > eps)
                      gb.data()[i] = g.data()[i] * e * std::pow(x, e - 1.0);
                  }
                  t.accumulate(ib, gb);
                }
                if (t.nodes_[ie].requires_grad) {
                  // d/de max(x,eps)^e = max(x,eps)^e * ln(max(x,eps))
                  double acc = 0.0;
                  for (std::size_t i = 0; i < bval.size(); ++i)
                    acc += g.data()[i] * saved.data()[i] *
                           std::log(std::max(bval.data()[i], eps));
                  t.accumulate(ie, Matrix(1, 1, acc));
                }
              });
}

Var Tape::broadcast(Var scalar, std::size_t rows, std::size_t cols) {
  if (scalar.value().size() != 1) {
    throw std::invalid_argument("broadcast: expects a 1x1 var, got " +
                                scalar.value().shape_str());
  }
  Matrix out(rows, cols, scalar.value()(0, 0));
  const int is = scalar.id;
  return make(std::move(out), scalar.requires_grad(), [is](Tape& t, const Matrix& g) {
    t.accumulate(is, Matrix(1, 1, padapt::sum(g)));
  });
}

Var Tape::reduce_sum(Var a) {
  Matrix out(1, 1, padapt::sum(a.value()));
  const int ia = a.id;
  const std::size_t rows = a.value().rows(), cols = a.value().cols();
  return make(std::move(out), a.requires_grad(), [ia, rows, cols](Tape& t, const Matrix& g) {
    t.accumulate(ia, Matrix(rows, cols, g(0, 0)));
  });
}

Var Tape::diag_scale(Var v, Var a) {
  const Matrix& vv = v.value();
  const Matrix& av = a.value();
  if (vv.cols() != 1 || vv.rows() != av.rows()) {
    throw std::invalid_argument("diag_scale: vector " + vv.shape_str() +
                                " incompatible with " + av.shape_str());
  }
  Matrix out = av;
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) *= vv(i, 0);
  const int iv = v.id, ia = a.id;
  return make(std::move(out), v.requires_grad() || a.requires_grad(),
              [iv, ia](Tape& t, const Matrix& g) {
                const Matrix& vval = t.nodes_[iv].value;
                const Matrix& aval = t.nodes_[ia].value;
                if (t.nodes_[iv].requires_grad) {
                  Matrix gv(vval.rows(), 1);
                  for (std::size_t i = 0; i < aval.rows(); ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < aval.cols(); ++j) acc += g(i, j) * aval(i, j);
                    gv(i, 0) = acc;
                  }
                  t.accumulate(iv, gv);
                }
                if (t.nodes_[ia].requires_grad) {
                  Matrix ga = g;
                  for (std::size_t i = 0; i < ga.rows(); ++i)
                    for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) *= vval(i, 0);
                  t.accumulate(ia, ga);
                }
              });
}

Var Tape::scale(Var a, double s) {
  Matrix out = padapt::scale(a.value(), s);
  const int ia = a.id;
  return make(std::move(out), a.requires_grad(), [ia, s](Tape& t, const Matrix& g) {
    t.accumulate(ia, padapt::scale(g, s));
  });
}

Var Tape::layer_norm(Var a, const Matrix& gain, const Matrix& offset, double eps) {
  const Matrix& in = a.value();
  if (gain.rows() != 1 || gain.cols() != in.cols() || !gain.same_shape(offset)) {
    throw std::invalid_argument("layer_norm: gain/offset must be 1x" +
                                std::to_string(in.cols()));
  }
  const std::size_t d = in.cols();
  Matrix normed(in.rows(), d);
  std::vector<double> inv_std(in.rows());
  for (std::size_t i = 0; i < in.rows(); ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += in(i, j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = in(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) normed(i, j) = (in(i, j) - mean) * inv_std[i];
  }
  Matrix out(in.rows(), d);
  for (std::size_t i = 0; i < in.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) out(i, j) = normed(i, j) * gain(0, j) + offset(0, j);
  const int ia = a.id;
  const Matrix gain_copy = gain;
  return make(std::move(out), a.requires_grad(),
              [ia, normed, inv_std, gain_copy](Tape& t, const Matrix& g) {
                const std::size_t d = normed.cols();
                Matrix ga(normed.rows(), d);
                for (std::size_t i = 0; i < normed.rows(); ++i) {
                  double mean_h = 0.0, mean_hx = 0.0;
                  for (std::size_t j = 0; j < d; ++j) {
                    const double h = g(i, j) * gain_copy(0, j);
                    mean_h += h;
                    mean_hx += h * normed(i, j);
                  }
                  mean_h /= static_cast<double>(d);
                  mean_hx /= static_cast<double>(d);
                  for (std::size_t j = 0; j < d; ++j) {
                    const double h = g(i, j) * gain_copy(0, j);
                    ga(i, j) = (h - mean_h - normed(i, j) * mean_hx) * inv_std[i];
                  }
                }
                t.accumulate(ia, ga);
              });
}

std::vector<Matrix> Tape::grad(Var loss, const std::vector<Var>& params) {
  if (consumed_) throw std::runtime_error("Tape: already consumed by a previous backward");
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw std::invalid_argument("grad: loss must be scalar (got " + lv.shape_str() + ")");
  }
  consumed_ = true;
  accumulate(loss.id, Matrix(1, 1, 1.0));
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (Var p : params) {
    const Node& n = node(p);
    if (n.has_grad)
      out.push_back(n.grad);
    else
      out.push_back(Matrix(n.value.rows(), n.value.cols()));
  }
  return out;
}

GradCheckReport check_gradients(const std::function<double(const std::vector<Matrix>&)>& f,
                                const std::vector<Matrix>& params,
                                const std::vector<Matrix>& analytic_grads, double h,
                                double tol) {
  if (params.size() != analytic_grads.size()) {
    throw std::invalid_argument("check_gradients: params/grads count mismatch");
  }
  GradCheckReport report;
  report.tolerance = tol;
  double err_sum = 0.0;
  std::vector<Matrix> work = params;
  for (std::size_t p = 0; p < work.size(); ++p) {
    for (std::size_t i = 0; i < work[p].size(); ++i) {
      const double orig = work[p].data()[i];
      work[p].data()[i] = orig + h;
      const double up = f(work);
      work[p].data()[i] = orig - h;
      const double down = f(work);
      work[p].data()[i] = orig;
      const double estimate = (up - down) / (2.0 * h);
      const double analytic = analytic_grads[p].data()[i];
      const double denom = std::max({std::abs(estimate), std::abs(analytic), 1e-8});
      const double rel = std::abs(estimate - analytic) / denom;
      report.max_rel_error = std::max(report.max_rel_error, rel);
      err_sum += rel;
      ++report.entries;
    }
  }
  report.mean_rel_error = report.entries > 0 ? err_sum / static_cast<double>(report.entries) : 0.0;
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace padapt::ad
