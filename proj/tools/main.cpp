#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"p-Laplacian attention-graph adapters: verification, training and ablations"};
  app.require_subcommand(1);

  using padapt::cli::CommonArgs;
  CommonArgs args;

  auto add_common = [&args](CLI::App* cmd, bool with_jobs = false) {
    cmd->add_option("--config", args.config_path, "TOML config file");
    cmd->add_option("--out", args.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", args.seed, "override run.seed");
    cmd->add_option("--set", args.overrides, "config override key=value (repeatable)");
    if (with_jobs) cmd->add_option("--jobs", args.jobs, "parallel cells");
  };

  // verify
  std::string filter, inject_fault, verify_out;
  CLI::App* verify = app.add_subcommand("verify", "run the invariant suites");
  verify->add_option("--filter", filter, "only checks whose name contains this");
  verify->add_option("--out", verify_out, "directory for verify.json");
  verify->add_option("--inject-fault", inject_fault,
                     "enable a named fault hook (p-normalize-scale)");

  // train
  CLI::App* train = app.add_subcommand("train", "train one configuration");
  add_common(train);

  // ablate
  CLI::App* ablate = app.add_subcommand("ablate", "run the configured ablation grid");
  add_common(ablate, /*with_jobs=*/true);

  // dump-attention
  std::string checkpoint_dir, site;
  std::optional<std::size_t> layer, row;
  CLI::App* dump = app.add_subcommand("dump-attention",
                                      "write attention (and renormalized) weights as CSV");
  dump->add_option("--checkpoint", checkpoint_dir, "checkpoint directory")->required();
  dump->add_option("--layer", layer, "decoder layer");
  dump->add_option("--site", site, "sa or ca");
  dump->add_option("--row", row, "query row for the plot-ready slice");
  add_common(dump);

  // spectral-report
  CLI::App* spectral = app.add_subcommand("spectral-report",
                                          "frequency-band energies around one p-step");
  add_common(spectral);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (verify->parsed()) return padapt::cli::cmd_verify(filter, verify_out, inject_fault);
  if (train->parsed()) return padapt::cli::cmd_train(args);
  if (ablate->parsed()) return padapt::cli::cmd_ablate(args);
  if (dump->parsed())
    return padapt::cli::cmd_dump_attention(args, checkpoint_dir, layer, site.empty() ? "" : site,
                                           row);
  if (spectral->parsed()) return padapt::cli::cmd_spectral_report(args);
  return 2;
}
