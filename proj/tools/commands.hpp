#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace padapt::cli {

// Arguments shared by the config-driven commands.
struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;  // repeated --set key=value
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
};

int cmd_verify(const std::string& filter, const std::string& out_dir,
               const std::string& inject_fault);
int cmd_train(const CommonArgs& args);
int cmd_ablate(const CommonArgs& args);
int cmd_dump_attention(const CommonArgs& args, const std::string& checkpoint_dir,
                       std::optional<std::size_t> layer, const std::string& site,
                       std::optional<std::size_t> row);
int cmd_spectral_report(const CommonArgs& args);

}  // namespace padapt::cli
