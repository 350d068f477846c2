#pragma once

#include "pinn/network.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace pinn {

inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointMeta {
  std::string problem_kind;       // "shm" or "wave"
  double problem_constant = 0.0;  // omega0 or c
  std::string optimizer;
  int epoch = 0;
  double final_loss = 0.0;
  std::uint64_t seed = 0;
  int format_version = kCheckpointFormatVersion;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  NetworkParams params;
  CheckpointMeta meta;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kIo, kCorrupt, kVersion, kInconsistent };

  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// JSON text: {format_version, layer_dims, flat, meta}. Doubles are written
/// in shortest round-trip form, so load(save(c)) reproduces every bit.
void save_checkpoint(const Checkpoint& chk, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string to_json_text(const Checkpoint& chk);
Checkpoint from_json_text(const std::string& text);

/// `<problem>_<constant>_<optimizer>_<epoch>.json`
std::string checkpoint_file_name(const CheckpointMeta& meta);

/// Formats a problem constant the way file names use it: 20, 1.5.
std::string format_constant(double value);

}  // namespace pinn
