#include "padapt/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "padapt/adapters.hpp"
#include "padapt/attention.hpp"
#include "padapt/autograd.hpp"
#include "padapt/graph.hpp"
#include "padapt/message_passing.hpp"
#include "padapt/rng.hpp"
#include "padapt/spectral.hpp"
#include "padapt/synthetic.hpp"

namespace padapt {

namespace {

// Values frozen from the first oracle run of the pinned constructions; the
// checks assert both the qualitative claim and agreement with these.
constexpr double kPinnedEdgeHomophily = -0.90791830378071614;
constexpr double kPinnedIntraQuery = 0.89685742668359192;
constexpr double kPinnedIntraValue = 0.91653191091889441;
constexpr double kPinnedRetentionP125 = 0.4808247974675362;
constexpr double kPinnedRetentionP200 = 0.0037197467890751732;

struct RandomAttentionCase {
  Matrix q, k, v;
  AttentionWeights weights;
  AttentionResult result;
  AugmentedAttention aug;
};

RandomAttentionCase make_attention_case(Rng& rng, std::size_t heads_choice) {
  const std::size_t heads = heads_choice == 0 ? 1 : (heads_choice == 1 ? 2 : 4);
  const std::size_t d = heads * (2 + rng.uniform_int(3));  // width divisible by heads
  const std::size_t n1 = 1 + rng.uniform_int(5);
  const std::size_t n2 = 1 + rng.uniform_int(6);
  RandomAttentionCase c;
  c.q = rng.normal_matrix(n1, d);
  c.k = rng.normal_matrix(n2, d);
  c.v = rng.normal_matrix(n2, d);
  c.weights = AttentionWeights::random(d, d, heads, rng);
  c.result = attention(c.q, c.k, c.v, c.weights);
  c.aug = augment(c.result.intermediate, ConcatMode::kQuery);
  return c;
}

using CheckFn = std::function<void(CheckResult&)>;

CheckResult run_one(const std::string& name, double tolerance, const CheckFn& fn) {
  CheckResult r;
  r.name = name;
  r.tolerance = tolerance;
  const auto start = std::chrono::steady_clock::now();
  try {
    fn(r);
    r.passed = r.max_error < tolerance;
  } catch (const std::exception& e) {
    r.passed = false;
    r.details = std::string("exception: ") + e.what();
    r.max_error = std::numeric_limits<double>::infinity();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

void check_augmentation_equivalence(CheckResult& r) {
  Rng rng(2024);
  for (int c = 0; c < 50; ++c) {
    RandomAttentionCase cs = make_attention_case(rng, c % 3);
    const Matrix lhs = slice_rows(matmul(cs.aug.m_tilde, cs.aug.v_tilde), 0, cs.aug.n_query);
    const Matrix rhs = matmul(cs.result.intermediate.attn_avg, cs.result.intermediate.v_proj);
    r.max_error = std::max(r.max_error, max_abs_diff(lhs, rhs));
  }
  r.details = "50 random (N1,N2,d,heads) cases";
}

void check_adapter_cross_route(CheckResult& r) {
  Rng rng(2025);
  for (int c = 0; c < 50; ++c) {
    RandomAttentionCase cs = make_attention_case(rng, c % 3);
    Adapter adapter;
    const std::size_t l1 = cs.weights.d_v();
    const std::size_t l2 = std::max<std::size_t>(1, l1 / 2);
    adapter.w_down = rng.normal_matrix(l1, l2);
    adapter.w_up = rng.normal_matrix(l2, l1);
    const Matrix direct =
        adapter_after_attention(averaged_attention_output(cs.result.intermediate), adapter);
    const Matrix augmented =
        slice_rows(augmented_adapter_forward(cs.aug, adapter), 0, cs.aug.n_query);
    r.max_error = std::max(r.max_error, max_abs_diff(direct, augmented));
  }
  r.details = "50 cases, single- and multi-head";
}

void check_p2_degeneracy(CheckResult& r) {
  Rng rng(2026);
  double bitwise = 0.0;
  for (int c = 0; c < 30; ++c) {
    const AttentionGraph g = make_random_graph(4 + rng.uniform_int(20), 1 + rng.uniform_int(8),
                                               0.5, 3000 + c);
    const Matrix f = Rng(4000 + c).normal_matrix(g.node_count(), g.features.cols());

    // p_normalize at p = 2 must return the adjacency bitwise.
    bitwise = std::max(bitwise, max_abs_diff(p_normalize(g, f, 2.0), g.adjacency));

    // One step equals the closed form (S F + mu X) / (1 + mu).
    PLaplacianConfig cfg;
    cfg.p = 2.0;
    cfg.mu = 0.5 + rng.uniform();
    const Matrix x = Rng(5000 + c).normal_matrix(g.node_count(), f.cols());
    const Matrix stepped = p_step(g, x, f, cfg);
    const Matrix closed = scale(add(matmul(normalized_adjacency(g), f), scale(x, cfg.mu)),
                                1.0 / (1.0 + cfg.mu));
    r.max_error = std::max(r.max_error, max_abs_diff(stepped, closed));
  }
  // p-adapter with fixed p = 2: the renormalized matrix is the augmented
  // attention itself.
  for (int c = 0; c < 10; ++c) {
    RandomAttentionCase cs = make_attention_case(rng, c % 3);
    PAdapter pa;
    pa.p_mode = PMode::kFixed;
    pa.fixed_p = 2.0;
    pa.mu = 1.0;
    const std::size_t l1 = cs.weights.d_v();
    pa.adapter.w_down = rng.normal_matrix(l1, std::max<std::size_t>(1, l1 / 2));
    pa.adapter.w_up = rng.normal_matrix(std::max<std::size_t>(1, l1 / 2), l1);

    const AttentionGraph g = build_graph(cs.aug);
    const AlphaBeta ab = alpha_beta(g.adjacency, g.degrees, 2.0, pa.mu);
    Matrix u = matmul(normalized_adjacency(g), g.features);
    for (std::size_t i = 0; i < u.rows(); ++i)
      for (std::size_t j = 0; j < u.cols(); ++j)
        u(i, j) = ab.alpha[i] * u(i, j) + ab.beta[i] * g.features(i, j);
    const Matrix expected = slice_rows(adapter_forward(u, pa.adapter), 0, cs.aug.n_query);
    r.max_error = std::max(r.max_error, max_abs_diff(p_adapter_forward(cs.aug, pa), expected));
  }
  if (bitwise != 0.0) {
    r.max_error = std::max(r.max_error, 1.0);
    r.details = "p_normalize(p=2) deviated from the adjacency";
  } else {
    r.details = "p_normalize bitwise, p_step closed form, p-adapter M-bar path";
  }
}

void check_variation_two_form(CheckResult& r) {
  Rng rng(2027);
  for (int c = 0; c < 100; ++c) {
    const AttentionGraph g = make_random_graph(4 + rng.uniform_int(12), 1 + rng.uniform_int(6),
                                               0.6, 6000 + c);
    const Matrix f = Rng(7000 + c).normal_matrix(g.node_count(), g.features.cols());
    const double p = 1.0 + rng.uniform() * 2.0;
    const double a = variation(g, f, p);
    const double b = variation_edge_sum(g, f, p);
    r.max_error = std::max(r.max_error, std::abs(a - b) / std::max(1.0, std::abs(a)));
  }
  r.details = "100 random graphs, p in [1, 3]";
}

void check_delta2_two_route(CheckResult& r) {
  Rng rng(2028);
  for (int c = 0; c < 100; ++c) {
    const AttentionGraph g = make_random_graph(4 + rng.uniform_int(12), 1 + rng.uniform_int(6),
                                               0.6, 8000 + c);
    const Matrix f = Rng(9000 + c).normal_matrix(g.node_count(), g.features.cols());
    const Matrix direct = p_laplacian_apply(g, f, 2.0);
    const Matrix via_div = scale(divergence(g, graph_gradient(g, f)), -0.5);
    r.max_error = std::max(r.max_error, max_abs_diff(direct, via_div));
  }
  r.details = "Delta_2 discrete form vs -1/2 div(grad)";
}

void check_gradient_antisymmetry(CheckResult& r) {
  Rng rng(2029);
  for (int c = 0; c < 100; ++c) {
    const AttentionGraph g = make_random_graph(3 + rng.uniform_int(12), 1 + rng.uniform_int(6),
                                               0.6, 10000 + c);
    const Matrix f = Rng(11000 + c).normal_matrix(g.node_count(), g.features.cols());
    const GraphGradient grad = graph_gradient(g, f);
    for (std::size_t i = 0; i < grad.nodes; ++i)
      for (std::size_t j = 0; j < grad.nodes; ++j)
        for (std::size_t k = 0; k < grad.dim; ++k)
          r.max_error = std::max(r.max_error, std::abs(grad.at(i, j, k) + grad.at(j, i, k)));
  }
  r.details = "grad F[i][j] + grad F[j][i] over 100 graphs";
}

void check_laplacian_psd(CheckResult& r) {
  Rng rng(2030);
  double worst_row_sum = 0.0;
  double worst_eig = 0.0;
  for (int c = 0; c < 100; ++c) {
    const AttentionGraph g = make_random_graph(4 + rng.uniform_int(61), 2, 0.4, 12000 + c);
    const Matrix l = laplacian(g);
    for (std::size_t i = 0; i < l.rows(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < l.cols(); ++j) row += l(i, j);
      // Row sums are D_ii - sum_j A_ij, nonzero only through the degree
      // clamp on isolated nodes; that clamp is 1e-12.
      worst_row_sum = std::max(worst_row_sum, std::abs(row));
    }
    worst_eig = std::max(worst_eig, std::max(0.0, -min_eigenvalue(l)));
  }
  r.max_error = std::max(worst_eig / 1e-8, worst_row_sum / 1e-10);
  r.tolerance = 1.0;  // normalized: eig floor -1e-8, row sums 1e-10
  std::ostringstream os;
  os << "min eig floor -1e-8 (worst " << -worst_eig << "), row sums (worst " << worst_row_sum
     << ")";
  r.details = os.str();
}

void check_solver(CheckResult& r) {
  double residual = 0.0;
  std::size_t runs = 0;
  for (int gseed = 100; gseed < 110; ++gseed) {
    // Anchors at scale 10 keep the fixed point's gradient norms O(1); unit
    // anchors at mu = 0.1 drive the renormalized row sums so high that the
    // iteration's spectral gap collapses below what 200 steps resolve.
    const AttentionGraph g = make_two_cluster_graph(10, 10, 4, 2.0, gseed);
    const Matrix x = Rng(900 + gseed).normal_matrix(20, 4, 10.0);
    for (double p : {1.25, 1.5, 1.75}) {
      for (double mu : {0.1, 1.0, 10.0}) {
        PLaplacianConfig cfg;
        cfg.p = p;
        cfg.mu = mu;
        const SolveResult sol = p_solve(g, x, cfg);  // throws if objective rises
        ++runs;
        if (!sol.converged || sol.iterations > cfg.max_iter) {
          r.max_error = std::max(r.max_error, 1.0);
        }
      }
    }
    // p = 2 fixed point: F* = (S F* + mu X) / (1 + mu).
    PLaplacianConfig cfg;
    cfg.p = 2.0;
    cfg.mu = 1.0;
    cfg.tol = 1e-10;
    const SolveResult sol = p_solve(g, x, cfg);
    const Matrix rhs = scale(add(matmul(normalized_adjacency(g), sol.features), scale(x, cfg.mu)),
                             1.0 / (1.0 + cfg.mu));
    residual = std::max(residual, frobenius_norm(sub(sol.features, rhs)));
  }
  r.max_error = std::max(r.max_error, residual / 1e-8);
  r.tolerance = 1.0;  // normalized: convergence flags plus residual floor 1e-8
  std::ostringstream os;
  os << runs << " solves over 10 pinned graphs; p=2 residual " << residual;
  r.details = os.str();
}

void check_gradient_suite(CheckResult& r) {
  for (int instance = 0; instance < 10; ++instance) {
    Rng rng(500 + instance);
    RandomAttentionCase cs = make_attention_case(rng, instance % 3);
    const std::size_t l1 = cs.weights.d_v();
    const std::size_t l2 = std::max<std::size_t>(1, l1 / 2);

    PAdapter pa;
    pa.p_mode = PMode::kLearnable;
    pa.rho = rng.uniform(-1.0, 1.0);
    pa.mu = 1.0;
    pa.adapter.w_down = rng.normal_matrix(l1, l2);
    pa.adapter.w_up = rng.normal_matrix(l2, l1, 0.1);
    const Matrix target = rng.normal_matrix(cs.aug.n_query, l1);

    auto loss_of = [&](const std::vector<Matrix>& params) {
      PAdapter local = pa;
      local.adapter.w_down = params[0];
      local.adapter.w_up = params[1];
      local.rho = params[2](0, 0);
      const Matrix diff = sub(p_adapter_forward(cs.aug, local), target);
      double acc = 0.0;
      for (std::size_t i = 0; i < diff.size(); ++i) acc += diff.data()[i] * diff.data()[i];
      return acc;
    };

    ad::Tape tape;
    PAdapterVars vars{tape.param(pa.adapter.w_down), tape.param(pa.adapter.w_up),
                      tape.param(Matrix(1, 1, pa.rho))};
    ad::Var out = p_adapter_forward(tape, cs.aug, pa, vars);
    ad::Var diff = tape.sub(out, tape.constant(target));
    ad::Var loss = tape.reduce_sum(tape.elementwise_mul(diff, diff));
    const std::vector<Matrix> analytic =
        tape.grad(loss, {vars.w_down, vars.w_up, vars.rho});

    const ad::GradCheckReport rep = ad::check_gradients(
        loss_of, {pa.adapter.w_down, pa.adapter.w_up, Matrix(1, 1, pa.rho)}, analytic, 1e-6,
        1e-4);
    r.max_error = std::max(r.max_error, rep.max_rel_error);
  }
  r.details = "w_down, w_up, rho vs central differences on 10 pinned instances";
}

void check_homophily(CheckResult& r) {
  const AttentionGraph g = make_two_cluster_graph(32, 32, 16, 3.0, 11);
  const HomophilyMetrics m = homophily_metrics(g);
  double err = 0.0;
  if (!(m.edge_homophily < 0.5)) err = 1.0;
  if (!(m.intra_query > 0.8)) err = 1.0;
  if (!(m.intra_value > 0.8)) err = 1.0;
  err = std::max(err, std::abs(m.edge_homophily - kPinnedEdgeHomophily) / 1e-9);
  err = std::max(err, std::abs(m.intra_query - kPinnedIntraQuery) / 1e-9);
  err = std::max(err, std::abs(m.intra_value - kPinnedIntraValue) / 1e-9);
  r.max_error = err;
  r.tolerance = 1.0;  // normalized: inequalities plus pinned values at 1e-9
  std::ostringstream os;
  os << "edge " << m.edge_homophily << ", intra_q " << m.intra_query << ", intra_v "
     << m.intra_value;
  r.details = os.str();
}

void check_spectral_response(CheckResult& r) {
  const AttentionGraph g = make_two_cluster_graph(32, 32, 16, 3.0, 11);
  const FrequencyEnergy before = frequency_energy(g, g.features);
  auto retention = [&](double p) {
    PLaplacianConfig cfg;
    cfg.p = p;
    cfg.mu = 1.0;
    const Matrix after = p_step(g, g.features, g.features, cfg);
    return frequency_energy(g, after).high / before.high;
  };
  const double r125 = retention(1.25);
  const double r200 = retention(2.0);
  double err = r125 > r200 ? 0.0 : 1.0;
  err = std::max(err, std::abs(r125 - kPinnedRetentionP125) / 1e-6);
  err = std::max(err, std::abs(r200 - kPinnedRetentionP200) / 1e-6);
  r.max_error = err;
  r.tolerance = 1.0;  // normalized: ordering plus pinned ratios at 1e-6
  std::ostringstream os;
  os << "high-band retention p=1.25: " << r125 << ", p=2: " << r200;
  r.details = os.str();
}

struct NamedCheck {
  const char* name;
  double tolerance;
  void (*fn)(CheckResult&);
};

constexpr NamedCheck kChecks[] = {
    {"augmentation-equivalence", 1e-12, check_augmentation_equivalence},
    {"adapter-cross-route", 1e-12, check_adapter_cross_route},
    {"p2-degeneracy", 1e-12, check_p2_degeneracy},
    {"variation-two-form", 1e-12, check_variation_two_form},
    {"delta2-two-route", 1e-10, check_delta2_two_route},
    {"gradient-antisymmetry", 1e-15, check_gradient_antisymmetry},
    {"laplacian-psd", 1.0, check_laplacian_psd},
    {"solver", 1.0, check_solver},
    {"gradient-suite", 1e-4, check_gradient_suite},
    {"homophily", 1.0, check_homophily},
    {"spectral-response", 1.0, check_spectral_response},
};

}  // namespace

std::vector<CheckResult> run_checks(const std::string& filter) {
  std::vector<CheckResult> results;
  for (const NamedCheck& check : kChecks) {
    if (!filter.empty() && std::string(check.name).find(filter) == std::string::npos) continue;
    results.push_back(run_one(check.name, check.tolerance, check.fn));
  }
  return results;
}

std::vector<std::string> check_names() {
  std::vector<std::string> names;
  for (const NamedCheck& check : kChecks) names.emplace_back(check.name);
  return names;
}

}  // namespace padapt
