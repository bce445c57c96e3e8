#include "padapt/ablation.hpp"

#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace padapt {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-')
                              ? c
                              : '_';
  return out;
}

// Reads back a completed cell's report; returns false if absent/corrupt.
bool load_completed(CellResult& cell) {
  std::ifstream f(fs::path(cell.cell_dir) / "report.json");
  if (!f) return false;
  try {
    const json j = json::parse(f);
    if (j.at("diverged").get<bool>()) return false;
    cell.initial_loss = j.at("initial_loss").get<double>();
    cell.final_loss = j.at("final_loss").get<double>();
    if (!j.at("evals").empty()) {
      cell.eval_loss = j.at("evals").back().at("loss").get<double>();
      cell.eval_accuracy = j.at("evals").back().at("accuracy").get<double>();
    }
    cell.ok = true;
    cell.skipped = true;
    return true;
  } catch (const json::exception&) {
    return false;
  }
}

void run_cell(const RunSetup& base, CellResult& cell, std::uint64_t cell_seed) {
  RunSetup setup = base;
  for (const auto& [key, value] : cell.overrides) apply_override(setup, key, value);
  setup.seed = cell_seed;
  setup.finalize();

  const Dataset data = generate_task(setup.task);
  ToyModel model = build_model(setup.model, setup.seed);
  RunReport report = train(model, data, setup.opt, setup.train_options);
  report.config_echo = to_kv(setup);

  write_report(report, cell.cell_dir);
  if (report.diverged) throw std::runtime_error("training diverged (non-finite loss)");
  cell.initial_loss = report.initial_loss;
  cell.final_loss = report.final_loss;
  if (!report.evals.empty()) {
    cell.eval_loss = report.evals.back().loss;
    cell.eval_accuracy = report.evals.back().accuracy;
  }
  cell.wall_seconds = report.wall_seconds;
  cell.ok = true;
}

void write_summary(const std::vector<CellResult>& cells, const fs::path& out_dir) {
  std::ofstream f(out_dir / "summary.csv");
  f << "cell,status,initial_loss,final_loss,eval_loss,eval_accuracy,seconds\n";
  for (const CellResult& c : cells) {
    f << c.cell_name << ","
      << (c.ok ? (c.skipped ? "skipped" : "ok") : "failed") << ","
      << c.initial_loss << "," << c.final_loss << "," << c.eval_loss << ","
      << c.eval_accuracy << "," << c.wall_seconds << "\n";
  }
}

}  // namespace

std::vector<CellResult> ablation_run(const RunSetup& base, const std::vector<GridAxis>& grid,
                                     const std::string& out_dir, std::size_t jobs) {
  if (grid.empty()) throw std::invalid_argument("ablation_run: empty grid");
  for (const GridAxis& axis : grid) {
    if (axis.values.empty()) {
      throw std::invalid_argument("ablation_run: axis '" + axis.key + "' has no values");
    }
  }

  std::size_t total = 1;
  for (const GridAxis& axis : grid) total *= axis.values.size();

  fs::create_directories(out_dir);
  std::vector<CellResult> cells(total);
  for (std::size_t index = 0; index < total; ++index) {
    CellResult& cell = cells[index];
    std::size_t rest = index;
    // Last axis varies fastest.
    std::vector<std::size_t> choice(grid.size());
    for (std::size_t a = grid.size(); a-- > 0;) {
      choice[a] = rest % grid[a].values.size();
      rest /= grid[a].values.size();
    }
    for (std::size_t a = 0; a < grid.size(); ++a) {
      cell.overrides.emplace_back(grid[a].key, grid[a].values[choice[a]]);
      if (!cell.cell_name.empty()) cell.cell_name += ",";
      cell.cell_name += grid[a].key + "=" + grid[a].values[choice[a]];
    }
    cell.cell_dir = (fs::path(out_dir) / sanitize(cell.cell_name)).string();
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t index = next.fetch_add(1);
      if (index >= total) return;
      CellResult& cell = cells[index];
      if (load_completed(cell)) continue;
      try {
        run_cell(base, cell, base.seed + index);
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  write_summary(cells, out_dir);
  return cells;
}

}  // namespace padapt
