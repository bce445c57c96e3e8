#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "padapt/ablation.hpp"
#include "padapt/message_passing.hpp"
#include "padapt/run_config.hpp"
#include "padapt/spectral.hpp"
#include "padapt/synthetic.hpp"
#include "padapt/toy_model.hpp"
#include "padapt/trainer.hpp"
#include "padapt/verify.hpp"

#include "toml_lite.hpp"

namespace padapt::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct FullConfig {
  RunSetup setup = default_setup();
  std::size_t ablate_jobs = 1;
  std::vector<GridAxis> grid;

  std::size_t sp_n_query = 32, sp_n_value = 32, sp_dim = 16;
  double sp_separation = 3.0, sp_mu = 1.0;
  std::uint64_t sp_seed = 11;
  std::vector<double> sp_p = {1.25, 1.5, 1.75, 2.0};

  std::size_t dump_layer = 0;
  std::string dump_site = "ca";
  std::size_t dump_sample = 0;
  std::optional<std::size_t> dump_row;
};

std::size_t to_size(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return static_cast<std::size_t>(v);
  } catch (...) {
    throw std::invalid_argument("config key " + key + ": expected integer, got '" + value + "'");
  }
}

double to_real(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config key " + key + ": expected number, got '" + value + "'");
  }
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

void interpret_entry(FullConfig& cfg, const ConfigEntry& e) {
  const std::string& k = e.key;
  if (starts_with(k, "ablate.grid.")) {
    const std::string axis_key = k.substr(std::string("ablate.grid.").size());
    std::vector<std::string> values = e.is_array ? e.array : std::vector<std::string>{e.value};
    cfg.grid.push_back({axis_key, std::move(values)});
    return;
  }
  if (e.is_array) {
    if (k == "spectral.p") {
      cfg.sp_p.clear();
      for (const std::string& v : e.array) cfg.sp_p.push_back(to_real(k, v));
      return;
    }
    throw std::invalid_argument("config key " + k + ": unexpected array value");
  }
  if (k == "ablate.jobs") cfg.ablate_jobs = to_size(k, e.value);
  else if (k == "spectral.n_query") cfg.sp_n_query = to_size(k, e.value);
  else if (k == "spectral.n_value") cfg.sp_n_value = to_size(k, e.value);
  else if (k == "spectral.dim") cfg.sp_dim = to_size(k, e.value);
  else if (k == "spectral.separation") cfg.sp_separation = to_real(k, e.value);
  else if (k == "spectral.mu") cfg.sp_mu = to_real(k, e.value);
  else if (k == "spectral.seed") cfg.sp_seed = to_size(k, e.value);
  else if (k == "spectral.p") cfg.sp_p = {to_real(k, e.value)};
  else if (k == "dump.layer") cfg.dump_layer = to_size(k, e.value);
  else if (k == "dump.site") cfg.dump_site = e.value;
  else if (k == "dump.sample") cfg.dump_sample = to_size(k, e.value);
  else if (k == "dump.row") cfg.dump_row = to_size(k, e.value);
  else apply_override(cfg.setup, k, e.value);  // throws on unknown keys
}

FullConfig load_config(const CommonArgs& args, bool config_required) {
  if (config_required && args.config_path.empty()) {
    throw std::invalid_argument("missing --config");
  }
  std::vector<ConfigEntry> entries;
  if (!args.config_path.empty()) entries = parse_config_file(args.config_path);
  for (const std::string& ov : args.overrides) {
    const std::size_t eq = ov.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + ov + "'");
    }
    ConfigEntry e;
    e.key = ov.substr(0, eq);
    const std::string value = ov.substr(eq + 1);
    if (!value.empty() && value.front() == '[') {
      // Reuse the file parser for array syntax.
      const auto parsed = parse_config_text(e.key + " = " + value);
      e = parsed.front();
    } else {
      e.value = value;
    }
    entries.push_back(std::move(e));
  }
  FullConfig cfg;
  for (const ConfigEntry& e : entries) {
    try {
      interpret_entry(cfg, e);
    } catch (const std::invalid_argument& err) {
      if (e.line > 0) {
        throw std::invalid_argument(std::string(err.what()) + " (line " +
                                    std::to_string(e.line) + ")");
      }
      throw;
    }
  }
  if (args.seed) cfg.setup.seed = *args.seed;
  if (args.jobs) cfg.ablate_jobs = *args.jobs;
  return cfg;
}

void write_matrix_csv(const Matrix& m, const fs::path& path) {
  std::ofstream f(path);
  f << std::setprecision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) f << (j ? "," : "") << m(i, j);
    f << "\n";
  }
}

void write_row_csv(const Matrix& m, std::size_t row, const fs::path& path) {
  std::ofstream f(path);
  f << std::setprecision(17);
  f << "key_index,value\n";
  for (std::size_t j = 0; j < m.cols(); ++j) f << j << "," << m(row, j) << "\n";
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace

int cmd_verify(const std::string& filter, const std::string& out_dir,
               const std::string& inject_fault) {
  return guarded([&]() {
    if (!inject_fault.empty()) {
      if (inject_fault == "p-normalize-scale") {
        testing::p_normalize_fault_scale() = 1.01;
      } else {
        throw std::invalid_argument("unknown fault hook: " + inject_fault);
      }
    }
    const std::vector<CheckResult> results = run_checks(filter);
    if (results.empty()) {
      throw std::invalid_argument("filter '" + filter + "' matches no checks");
    }
    bool all_passed = true;
    json report = json::array();
    for (const CheckResult& r : results) {
      all_passed = all_passed && r.passed;
      std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name
                << ": max_error=" << std::scientific << std::setprecision(3) << r.max_error
                << " tolerance=" << r.tolerance << std::defaultfloat << " ("
                << std::setprecision(3) << r.seconds << "s) " << r.details << "\n";
      report.push_back({{"name", r.name},
                        {"passed", r.passed},
                        {"max_error", r.max_error},
                        {"tolerance", r.tolerance},
                        {"details", r.details},
                        {"seconds", r.seconds}});
    }
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      std::ofstream f(fs::path(out_dir) / "verify.json");
      f << report.dump(2) << "\n";
    }
    if (!all_passed) {
      std::cout << "verification FAILED:";
      for (const CheckResult& r : results)
        if (!r.passed) std::cout << " " << r.name;
      std::cout << "\n";
      return kExitFailure;
    }
    std::cout << "verification passed (" << results.size() << " checks)\n";
    return kExitOk;
  });
}

int cmd_train(const CommonArgs& args) {
  return guarded([&]() {
    FullConfig cfg = load_config(args, /*config_required=*/true);
    cfg.setup.finalize();

    const Dataset data = generate_task(cfg.setup.task);
    ToyModel model = build_model(cfg.setup.model, cfg.setup.seed);
    RunReport report = train(model, data, cfg.setup.opt, cfg.setup.train_options);
    report.config_echo = to_kv(cfg.setup);

    write_report(report, args.out_dir);
    save_checkpoint(model, (fs::path(args.out_dir) / "checkpoint").string());

    if (report.diverged) {
      std::cerr << "training diverged at step " << report.steps_completed + 1
                << "; partial report written to " << args.out_dir << "\n";
      return kExitFailure;
    }
    std::cout << "trained " << report.steps_completed << " steps: loss "
              << report.initial_loss << " -> " << report.final_loss;
    if (!report.evals.empty()) {
      std::cout << ", eval loss " << report.evals.back().loss << ", accuracy "
                << report.evals.back().accuracy;
    }
    std::cout << " (" << std::setprecision(3) << report.wall_seconds << "s)\n";
    std::cout << "outputs in " << args.out_dir << "\n";
    return kExitOk;
  });
}

int cmd_ablate(const CommonArgs& args) {
  return guarded([&]() {
    FullConfig cfg = load_config(args, /*config_required=*/true);
    if (cfg.grid.empty()) {
      throw std::invalid_argument("config defines no [ablate.grid] axes");
    }
    const std::vector<CellResult> cells =
        ablation_run(cfg.setup, cfg.grid, args.out_dir, cfg.ablate_jobs);
    std::size_t failed = 0;
    for (const CellResult& c : cells) {
      std::cout << (c.ok ? (c.skipped ? "[SKIP] " : "[ OK ] ") : "[FAIL] ") << c.cell_name;
      if (c.ok)
        std::cout << " final_loss=" << c.final_loss << " eval_acc=" << c.eval_accuracy;
      else
        std::cout << " error: " << c.error;
      std::cout << "\n";
      failed += c.ok ? 0 : 1;
    }
    std::cout << cells.size() << " cells, " << failed << " failed; summary in " << args.out_dir
              << "/summary.csv\n";
    return failed == 0 ? kExitOk : kExitFailure;
  });
}

int cmd_dump_attention(const CommonArgs& args, const std::string& checkpoint_dir,
                       std::optional<std::size_t> layer, const std::string& site,
                       std::optional<std::size_t> row) {
  return guarded([&]() {
    FullConfig cfg = load_config(args, /*config_required=*/false);
    if (!layer) layer = cfg.dump_layer;
    std::string site_name = site.empty() ? cfg.dump_site : site;
    AttnSite which;
    if (site_name == "sa") which = AttnSite::kSa;
    else if (site_name == "ca") which = AttnSite::kCa;
    else throw std::invalid_argument("site must be 'sa' or 'ca', got '" + site_name + "'");

    ToyModel model = load_checkpoint(checkpoint_dir);
    // The dataset supplies the probe input; its geometry must match the
    // checkpointed model.
    cfg.setup.task.vocab = model.config.vocab;
    cfg.setup.finalize();
    const Dataset data = generate_task(cfg.setup.task);
    if (cfg.dump_sample >= data.eval_set.size()) {
      throw std::invalid_argument("dump.sample out of range");
    }
    const Sample& sample = data.eval_set[cfg.dump_sample];

    const AttentionDump dump =
        dump_attention(model, sample.tokens, encode(model, sample.enc_raw), *layer, which);
    fs::create_directories(args.out_dir);
    write_matrix_csv(dump.m, fs::path(args.out_dir) / "M.csv");
    const std::size_t query_row = row ? *row
                                      : (cfg.dump_row ? *cfg.dump_row : dump.m.rows() - 1);
    if (query_row >= dump.m.rows()) {
      throw std::invalid_argument("row " + std::to_string(query_row) + " out of range (" +
                                  std::to_string(dump.m.rows()) + " query rows)");
    }
    write_row_csv(dump.m, query_row, fs::path(args.out_dir) / "M_row.csv");
    if (dump.m_bar) {
      write_matrix_csv(*dump.m_bar, fs::path(args.out_dir) / "M_bar.csv");
      write_row_csv(*dump.m_bar, query_row, fs::path(args.out_dir) / "M_bar_row.csv");
    }
    std::cout << "wrote M.csv (" << dump.m.shape_str() << ")"
              << (dump.m_bar ? " and M_bar.csv" : "") << " to " << args.out_dir << "\n";
    return kExitOk;
  });
}

int cmd_spectral_report(const CommonArgs& args) {
  return guarded([&]() {
    FullConfig cfg = load_config(args, /*config_required=*/false);
    if (cfg.sp_p.empty()) throw std::invalid_argument("spectral.p list is empty");
    if (cfg.sp_n_query + cfg.sp_n_value > 512) {
      throw std::invalid_argument("spectral graph limited to 512 nodes");
    }
    const AttentionGraph g = make_two_cluster_graph(cfg.sp_n_query, cfg.sp_n_value, cfg.sp_dim,
                                                    cfg.sp_separation, cfg.sp_seed);
    const FrequencyEnergy before = frequency_energy(g, g.features);

    json results = json::array();
    for (double p : cfg.sp_p) {
      PLaplacianConfig step_cfg;
      step_cfg.p = p;
      step_cfg.mu = cfg.sp_mu;
      const Matrix after_signal = p_step(g, g.features, g.features, step_cfg);
      const FrequencyEnergy after = frequency_energy(g, after_signal);
      results.push_back({{"p", p},
                         {"before_low", before.low},
                         {"before_high", before.high},
                         {"after_low", after.low},
                         {"after_high", after.high},
                         {"retention_low", after.low / before.low},
                         {"retention_high", after.high / before.high}});
      std::cout << "p=" << p << ": high-band retention " << after.high / before.high
                << ", low-band retention " << after.low / before.low << "\n";
    }
    json out;
    out["graph"] = {{"n_query", cfg.sp_n_query},
                    {"n_value", cfg.sp_n_value},
                    {"dim", cfg.sp_dim},
                    {"separation", cfg.sp_separation},
                    {"seed", cfg.sp_seed},
                    {"mu", cfg.sp_mu}};
    out["results"] = results;
    fs::create_directories(args.out_dir);
    std::ofstream f(fs::path(args.out_dir) / "spectral.json");
    f << out.dump(2) << "\n";
    std::cout << "wrote " << (fs::path(args.out_dir) / "spectral.json").string() << "\n";
    return kExitOk;
  });
}

}  // namespace padapt::cli
