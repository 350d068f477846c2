#include "pinn_cli/cli.hpp"

#include "pinn/checkpoint.hpp"
#include "pinn/config.hpp"
#include "pinn/errors.hpp"
#include "pinn/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/os.h>
#include <fmt/ostream.h>

#include <cstdlib>
#include <functional>
#include <optional>
#include <ostream>

#ifndef PINN_FORGE_CONFIG_DIR
#define PINN_FORGE_CONFIG_DIR "configs"
#endif

namespace pinn::cli {

namespace fs = std::filesystem;

const std::vector<ExperimentRecipe>& recipes() {
  static const std::vector<ExperimentRecipe> registry = {
      {"shm-sweep",
       "cold-start oscillator at omega0 = 20..60 with Adam and with L-BFGS",
       {"shm20.toml", "shm30.toml", "shm40.toml", "shm50.toml", "shm60.toml"},
       {"summary.csv", "<optimizer>/<stage>/shm_<omega0>_*.json", "*_metrics.csv", "*_field.csv"}},
      {"shm-transfer-chain",
       "Adam base at 30, then fine-tune 40 -> 50 -> 60",
       {"shm30_base.toml", "shm40_transfer.toml", "shm50_transfer.toml", "shm60_transfer.toml"},
       {"summary.csv", "<stage>/shm_<omega0>_*.json", "*_metrics.csv", "*_field.csv"}},
      {"wave-c1",
       "wave equation at c = 1 with L-BFGS",
       {"wave_c1.toml"},
       {"summary.csv", "c1/wave_1_lbfgs_*.json", "*_metrics.csv", "*_field.csv"}},
      {"wave-transfer-chain",
       "wave equation c = 1 -> 1.5 -> 2 -> 4, plus a cold start at c = 4",
       {"wave_chain_c1.toml", "wave_chain_c1.5.toml", "wave_chain_c2.toml", "wave_chain_c4.toml"},
       {"summary.csv", "<stage>/wave_<c>_*.json", "*_metrics.csv", "*_field.csv"}},
  };
  return registry;
}

fs::path config_directory() {
  if (const char* env = std::getenv("PINN_FORGE_CONFIGS"); env != nullptr && *env != '\0') {
    return env;
  }
  return PINN_FORGE_CONFIG_DIR;
}

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> optimizer;
  std::optional<int> max_epochs;
  std::optional<double> target_loss;
  std::optional<int> threads;
};

fs::path resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PINN_FORGE_OUT"); env != nullptr && *env != '\0') return env;
  return "pinn_forge_out";
}

void apply(TrainConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.optimizer) cfg.optimizer.kind = parse_optimizer(*o.optimizer);
  if (o.max_epochs) cfg.max_epochs = *o.max_epochs;
  if (o.target_loss) cfg.target_loss = *o.target_loss;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
}

const char* stop_name(StopReason r) {
  switch (r) {
    case StopReason::kTargetReached: return "converged";
    case StopReason::kBudgetExhausted: return "budget exhausted";
    case StopReason::kStalled: return "stalled";
  }
  return "?";
}

int exit_code(const TrainResult& r) { return r.converged() ? kConverged : kBudgetExhausted; }

fs::path field_path(const fs::path& dir, const ProblemSpec& problem) {
  return dir / (problem.kind() + "_" + format_constant(problem.constant()) + "_field.csv");
}

// Guards a subcommand body, mapping failures onto exit codes.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kUsage;
  } catch (const ArchitectureMismatch& e) {
    fmt::print(err, "incompatible checkpoint: {}\n", e.what());
    return kIncompatible;
  } catch (const CheckpointError& e) {
    const bool unreadable =
        e.kind() == CheckpointError::Kind::kIo || e.kind() == CheckpointError::Kind::kCorrupt;
    fmt::print(err, "{}: {}\n", unreadable ? "checkpoint error" : "incompatible checkpoint", e.what());
    return unreadable ? kUsage : kIncompatible;
  } catch (const DivergenceError& e) {
    fmt::print(err, "training diverged at epoch {}: {}\n", e.last_metrics().epoch, e.what());
    return kDiverged;
  } catch (const CurriculumError& e) {
    fmt::print(err, "curriculum aborted: {}\n", e.what());
    return kDiverged;
  } catch (const UsageError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsage;
  } catch (const DomainError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsage;
  }
}

EpochCallback progress(std::ostream& out, int every) {
  if (every <= 0) return {};
  return [&out, every](const MetricsRecord& m) {
    if (m.epoch % every == 0) {
      fmt::print(out, "epoch {:>6}  loss {:.4e}  l2 {:.3f}%\n", m.epoch, m.loss_total, m.l2_rel_error);
    }
  };
}

void print_result(std::ostream& out, const TrainResult& r, const fs::path& checkpoint,
                  const fs::path& metrics) {
  fmt::print(out, "stop: {}\n", stop_name(r.stop));
  fmt::print(out, "epochs: {}\n", r.epochs());
  fmt::print(out, "initial loss: {:.6e}\n", r.initial.total);
  fmt::print(out, "final loss: {:.6e}\n", r.final_loss());
  fmt::print(out, "relative L2 error (%): {:.2f}\n", r.final_l2());
  fmt::print(out, "checkpoint: {}\n", checkpoint.string());
  fmt::print(out, "metrics: {}\n", metrics.string());
}

int cmd_train(const std::string& config, const Overrides& o, const std::string& base,
              const fs::path& out_dir, int log_every, std::ostream& out) {
  TrainConfig cfg = load_config(config);
  if (!base.empty()) {
    cfg.init_params = load_checkpoint(base).params;
    if (cfg.init_params->layer_dims != cfg.layer_dims) {
      throw ArchitectureMismatch(base + " has a different architecture than " + config);
    }
  }
  apply(cfg, o);
  const TrainResult r = train(cfg, progress(out, log_every));
  const auto [chk, metrics] = persist_run(r, out_dir);
  print_result(out, r, chk, metrics);
  return exit_code(r);
}

int cmd_eval(const std::string& checkpoint, const std::string& config,
             std::optional<double> omega0, std::optional<double> c, const fs::path& out_dir,
             std::ostream& out) {
  const Checkpoint chk = load_checkpoint(checkpoint);
  ProblemSpec problem;
  if (!config.empty()) {
    problem = load_config(config).problem;
  } else if (omega0) {
    problem = ProblemSpec{ShmParams::from_omega0(*omega0)};
  } else if (c) {
    problem = ProblemSpec{WaveParams{*c}};
  } else if (chk.meta.problem_kind == "shm") {
    problem = ProblemSpec{ShmParams::from_omega0(chk.meta.problem_constant)};
  } else if (chk.meta.problem_kind == "wave") {
    problem = ProblemSpec{WaveParams{chk.meta.problem_constant}};
  } else {
    throw UsageError("cannot tell the problem from the checkpoint; pass --config, --omega0 or --c");
  }
  const FieldReport report = evaluate_checkpoint(chk, problem);
  fs::create_directories(out_dir);
  const fs::path field = field_path(out_dir, problem);
  write_field_csv(report, field);
  fmt::print(out, "relative L2 error (%): {:.2f}\n", report.l2_rel_error);
  fmt::print(out, "field: {}\n", field.string());
  return kConverged;
}

// ---------------------------------------------------------------------------
// reproduce

struct SummaryRow {
  std::string stage;
  std::string init;
  const TrainResult* result;
  ProblemSpec problem;
};

void write_summary(const std::vector<SummaryRow>& rows, const fs::path& path) {
  auto file = fmt::output_file(path.string());
  file.print("stage,problem,constant,optimizer,init,epochs,final_loss,l2_rel_error,converged\n");
  for (const SummaryRow& r : rows) {
    const CheckpointMeta& m = r.result->checkpoint.meta;
    file.print("{},{},{},{},{},{},{},{},{}\n", r.stage, m.problem_kind,
               format_constant(m.problem_constant), m.optimizer, r.init, r.result->epochs(),
               r.result->final_loss(), r.result->final_l2(), r.result->converged() ? 1 : 0);
  }
}

void persist_stage(const TrainResult& r, const ProblemSpec& problem, const fs::path& dir) {
  persist_run(r, dir);
  write_field_csv(evaluate_checkpoint(r.checkpoint, problem), field_path(dir, problem));
}

void print_stage(std::ostream& out, const std::string& stage, const TrainResult& r) {
  fmt::print(out, "{:<12} {:<17} epochs {:>6}  loss {:.4e}  l2 {:.3f}%\n", stage, stop_name(r.stop),
             r.epochs(), r.final_loss(), r.final_l2());
}

TrainConfig recipe_config(const std::string& file, const Overrides& o) {
  TrainConfig cfg = load_config(config_directory() / file);
  Overrides only_run;
  only_run.seed = o.seed;
  only_run.threads = o.threads;
  apply(cfg, only_run);
  return cfg;
}

std::string stage_id(const TrainConfig& cfg) {
  return (cfg.problem.is_shm() ? "w" : "c") + format_constant(cfg.problem.constant());
}

int run_chain(const ExperimentRecipe& recipe, const Overrides& o, const fs::path& dir,
              bool cold_last, std::ostream& out) {
  CurriculumSpec spec;
  for (const std::string& file : recipe.config_files) {
    TrainConfig cfg = recipe_config(file, o);
    spec.stages.push_back({stage_id(cfg), std::move(cfg)});
  }
  std::vector<StageResult> stages;
  try {
    stages = run_curriculum(spec, std::nullopt);
  } catch (const CurriculumError& e) {
    for (const StageResult& s : e.completed()) print_stage(out, s.id, s.result);
    throw;
  }

  std::vector<SummaryRow> rows;
  bool all = true;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const ProblemSpec& problem = spec.stages[i].config.problem;
    persist_stage(stages[i].result, problem, dir / stages[i].id);
    print_stage(out, stages[i].id, stages[i].result);
    rows.push_back({stages[i].id, i == 0 ? "cold" : "transfer:" + stages[i - 1].id,
                    &stages[i].result, problem});
    all = all && stages[i].result.converged();
  }

  std::optional<TrainResult> cold;
  if (cold_last) {
    const TrainConfig& cfg = spec.stages.back().config;
    cold = train(cfg);
    const std::string id = spec.stages.back().id + "-cold";
    persist_stage(*cold, cfg.problem, dir / id);
    print_stage(out, id, *cold);
    rows.push_back({id, "cold", &*cold, cfg.problem});
  }
  write_summary(rows, dir / "summary.csv");
  fmt::print(out, "summary: {}\n", (dir / "summary.csv").string());
  return all ? kConverged : kBudgetExhausted;
}

int run_sweep(const ExperimentRecipe& recipe, const Overrides& o, const fs::path& dir,
              std::ostream& out) {
  std::vector<TrainResult> results;
  std::vector<std::pair<std::string, ProblemSpec>> meta;
  results.reserve(recipe.config_files.size() * 2);
  for (const std::string& file : recipe.config_files) {
    for (const char* optimizer : {"adam", "lbfgs"}) {
      TrainConfig cfg = recipe_config(file, o);
      cfg.optimizer.kind = parse_optimizer(optimizer);
      const std::string id = stage_id(cfg);
      results.push_back(train(cfg));
      persist_stage(results.back(), cfg.problem, dir / optimizer / id);
      print_stage(out, id + "/" + optimizer, results.back());
      meta.emplace_back(id, cfg.problem);
    }
  }
  std::vector<SummaryRow> rows;
  bool all = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    rows.push_back({meta[i].first, "cold", &results[i], meta[i].second});
    all = all && results[i].converged();
  }
  write_summary(rows, dir / "summary.csv");
  fmt::print(out, "summary: {}\n", (dir / "summary.csv").string());
  return all ? kConverged : kBudgetExhausted;
}

int cmd_reproduce(const std::string& name, const Overrides& o, const fs::path& out_dir,
                  std::ostream& out, std::ostream& err) {
  const auto& all = recipes();
  const auto it = std::find_if(all.begin(), all.end(),
                               [&](const ExperimentRecipe& r) { return r.name == name; });
  if (it == all.end()) {
    fmt::print(err, "unknown recipe '{}'. Available:\n", name);
    for (const ExperimentRecipe& r : all) fmt::print(err, "  {:<20} {}\n", r.name, r.description);
    return kUsage;
  }
  const fs::path dir = out_dir / it->name;
  fs::create_directories(dir);
  if (it->name == "shm-sweep") return run_sweep(*it, o, dir, out);
  return run_chain(*it, o, dir, it->name == "wave-transfer-chain", out);
}

void add_overrides(CLI::App* cmd, Overrides& o, std::string& out_dir) {
  cmd->add_option("--out-dir", out_dir, "output directory (default: $PINN_FORGE_OUT)");
  cmd->add_option("--seed", o.seed, "initialisation seed");
  cmd->add_option("--threads", o.threads, "worker threads for loss evaluation")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Physics-informed network training with transfer learning"};
  app.name("pinn_forge");
  app.require_subcommand(1);

  Overrides o;
  std::string out_dir;
  std::string config;
  std::string base;
  std::string checkpoint;
  std::string recipe;
  std::optional<double> omega0;
  std::optional<double> c;
  int log_every = 0;

  auto add_training = [&](CLI::App* cmd) {
    add_overrides(cmd, o, out_dir);
    cmd->add_option("--config", config, "TOML config file")->required();
    cmd->add_option("--optimizer", o.optimizer, "adam, lbfgs or hybrid");
    cmd->add_option("--max-epochs", o.max_epochs, "epoch budget")->check(CLI::PositiveNumber);
    cmd->add_option("--target-loss", o.target_loss, "stop once the total loss is at or below this");
    cmd->add_option("--log-every", log_every, "print progress every N epochs");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "train from a config");
  add_training(train_cmd);
  train_cmd->add_option("--base-checkpoint", base, "warm-start from this checkpoint");

  CLI::App* transfer_cmd = app.add_subcommand("transfer", "fine-tune a checkpoint on a new config");
  add_training(transfer_cmd);
  transfer_cmd->add_option("--base-checkpoint", base, "checkpoint to start from")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "relative L2 error and field dump of a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--config", config, "take the problem from this config");
  eval_cmd->add_option("--omega0", omega0, "oscillator natural frequency");
  eval_cmd->add_option("--c", c, "wave velocity");
  eval_cmd->add_option("--out-dir", out_dir, "output directory (default: $PINN_FORGE_OUT)");

  CLI::App* repro_cmd = app.add_subcommand("reproduce", "run a named end-to-end experiment");
  repro_cmd->add_option("recipe", recipe, "recipe name")->required();
  add_overrides(repro_cmd, o, out_dir);

  CLI::App* list_cmd = app.add_subcommand("recipes", "list the reproducible experiments");

  std::vector<const char*> argv{"pinn_forge"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kConverged;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kConverged;
    }
    fmt::print(err, "{}\n", e.what());
    if (!app.get_subcommands().empty()) {
      err << app.get_subcommands().front()->help();
    }
    return kUsage;
  }

  return guarded(err, [&]() -> int {
    if (train_cmd->parsed() || transfer_cmd->parsed()) {
      if (!fs::exists(config)) throw ConfigError(config, 0, "", "config file does not exist");
      return cmd_train(config, o, base, resolve_out_dir(out_dir), log_every, out);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(checkpoint, config, omega0, c, resolve_out_dir(out_dir), out);
    }
    if (repro_cmd->parsed()) return cmd_reproduce(recipe, o, resolve_out_dir(out_dir), out, err);
    if (list_cmd->parsed()) {
      for (const ExperimentRecipe& r : recipes()) fmt::print(out, "{:<20} {}\n", r.name, r.description);
      return kConverged;
    }
    return kUsage;
  });
}

}  // namespace pinn::cli
