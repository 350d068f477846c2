#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace pinn::cli {

enum ExitCode : int {
  kConverged = 0,
  kBudgetExhausted = 1,
  kUsage = 2,
  kIncompatible = 3,
  kDiverged = 4,
};

struct ExperimentRecipe {
  std::string name;
  std::string description;
  std::vector<std::string> config_files;  // relative to the config directory
  std::vector<std::string> outputs;
};

const std::vector<ExperimentRecipe>& recipes();

/// Directory holding the bundled TOML configs: $PINN_FORGE_CONFIGS if set,
/// otherwise the location baked in at build time.
std::filesystem::path config_directory();

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pinn::cli
