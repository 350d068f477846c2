#pragma once

#include "pinn/errors.hpp"
#include "pinn/trainer.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace pinn {

/// Parse or validation failure in a config file. `line` is 1-based, 0 when
/// the problem is not tied to a line (missing file, missing key).
class ConfigError : public UsageError {
 public:
  ConfigError(std::string source, int line, std::string field, const std::string& message);

  const std::string& source() const noexcept { return source_; }
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string source_;
  int line_;
  std::string field_;
};

/// Reads a TOML-style config with the sections
///
///   [problem]    kind = "shm" | "wave", omega0, mass, friction, t_end, c
///   [network]    layers = [1, 64, 64, 64, 64, 1]
///   [optimizer]  kind, adam_epochs, lbfgs_epochs, learning_rate, beta1, beta2,
///                epsilon, memory, initial_step, c1, c2, max_trials
///   [sampling]   scheme = "sobol" | "equidistant", n_interior,
///                n_spatial_boundary, n_temporal_boundary, skip
///   [loss]       w_f, w_i, w_b, c_t
///   [run]        max_epochs, target_loss, seed, l2_every, timing, threads
///
/// Only `problem.kind` and its constant (omega0 or c) are required; the rest
/// start from the problem's defaults. Supports `#` comments, strings,
/// integers, floats, booleans and flat numeric arrays.
TrainConfig parse_config(std::string_view text, const std::string& source = "<config>");

TrainConfig load_config(const std::filesystem::path& path);

}  // namespace pinn
