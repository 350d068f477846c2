#include "pinn/checkpoint.hpp"

#include "pinn/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace pinn {

using nlohmann::json;

std::string to_json_text(const Checkpoint& chk) {
  validate(chk.params);
  json meta = {
      {"problem_kind", chk.meta.problem_kind},
      {"problem_constant", chk.meta.problem_constant},
      {"optimizer", chk.meta.optimizer},
      {"epoch", chk.meta.epoch},
      {"final_loss", chk.meta.final_loss},
      {"seed", chk.meta.seed},
      {"format_version", chk.meta.format_version},
  };
  json doc = {
      {"format_version", chk.meta.format_version},
      {"layer_dims", chk.params.layer_dims},
      {"flat", std::vector<double>(chk.params.flat.begin(), chk.params.flat.end())},
      {"meta", std::move(meta)},
  };
  return doc.dump(1);
}

Checkpoint from_json_text(const std::string& text) {
  using Kind = CheckpointError::Kind;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointError(Kind::kCorrupt, std::string("checkpoint is not valid JSON: ") + e.what());
  }

  Checkpoint chk;
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw CheckpointError(Kind::kVersion,
                            "unsupported checkpoint format_version " + std::to_string(version));
    }
    const json& meta = doc.at("meta");
    chk.meta.format_version = meta.at("format_version").get<int>();
    if (chk.meta.format_version != kCheckpointFormatVersion) {
      throw CheckpointError(Kind::kVersion, "unsupported checkpoint meta.format_version " +
                                                std::to_string(chk.meta.format_version));
    }
    chk.meta.problem_kind = meta.at("problem_kind").get<std::string>();
    chk.meta.problem_constant = meta.at("problem_constant").get<double>();
    chk.meta.optimizer = meta.at("optimizer").get<std::string>();
    chk.meta.epoch = meta.at("epoch").get<int>();
    chk.meta.final_loss = meta.at("final_loss").get<double>();
    chk.meta.seed = meta.at("seed").get<std::uint64_t>();

    chk.params.layer_dims = doc.at("layer_dims").get<std::vector<int>>();
    const auto flat = doc.at("flat").get<std::vector<double>>();
    chk.params.flat = Eigen::Map<const Eigen::VectorXd>(flat.data(),
                                                        static_cast<Eigen::Index>(flat.size()));
  } catch (const json::exception& e) {
    throw CheckpointError(Kind::kCorrupt, std::string("malformed checkpoint: ") + e.what());
  }

  try {
    validate(chk.params);
  } catch (const UsageError& e) {
    throw CheckpointError(Kind::kInconsistent, std::string("inconsistent checkpoint: ") + e.what());
  }
  return chk;
}

void save_checkpoint(const Checkpoint& chk, const std::filesystem::path& path) {
  const std::string text = to_json_text(chk);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::kIo, "cannot write " + path.string());
  out << text << '\n';
  if (!out) throw CheckpointError(CheckpointError::Kind::kIo, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string format_constant(double value) {
  std::ostringstream os;
  os << value;
  return os.str();
}

std::string checkpoint_file_name(const CheckpointMeta& meta) {
  return meta.problem_kind + "_" + format_constant(meta.problem_constant) + "_" + meta.optimizer +
         "_" + std::to_string(meta.epoch) + ".json";
}

}  // namespace pinn
