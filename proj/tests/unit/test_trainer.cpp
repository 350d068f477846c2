#include "pinn/checkpoint.hpp"
#include "pinn/errors.hpp"
#include "pinn/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pinn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "pinn_forge_trainer" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TrainConfig small_shm(double omega0, OptimizerKind kind, int epochs) {
  TrainConfig cfg = TrainConfig::shm_default(omega0);
  cfg.layer_dims = {1, 8, 8, 1};
  cfg.plan.n_interior = 20;
  cfg.optimizer.kind = kind;
  cfg.max_epochs = epochs;
  cfg.target_loss = 1e-12;
  cfg.l2_every = 5;
  return cfg;
}

TrainConfig small_wave(double c, int epochs) {
  TrainConfig cfg = TrainConfig::wave_default(c);
  cfg.layer_dims = {2, 6, 1};
  cfg.plan = {SamplingScheme::kSobol, 32, 8, 8, 1};
  cfg.max_epochs = epochs;
  cfg.target_loss = 1e-12;
  return cfg;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("metrics rows count optimizer updates") {
  const TrainResult r = train(small_shm(20, OptimizerKind::kAdam, 10));
  REQUIRE(r.epochs() == 10);
  for (int i = 0; i < 10; ++i) CHECK(r.metrics[i].epoch == i + 1);
  CHECK(r.stop == StopReason::kBudgetExhausted);
  CHECK_FALSE(r.converged());
  CHECK(r.checkpoint.meta.epoch == 10);
  CHECK(r.checkpoint.meta.final_loss == r.final_loss());
  CHECK(r.checkpoint.meta.optimizer == "adam");
  CHECK(r.checkpoint.meta.problem_kind == "shm");
  CHECK(r.final_loss() < r.initial.total);
  for (const MetricsRecord& m : r.metrics) {
    CHECK(m.loss_total == doctest::Approx(m.loss_f * 1e-4 + m.loss_i * m.lambda_i));
    CHECK(m.wall_time_ms == 0.0);
  }
}

TEST_CASE("budget is the smaller of max_epochs and the hybrid schedule") {
  TrainConfig cfg = small_shm(20, OptimizerKind::kHybrid, 100);
  cfg.optimizer.adam_epochs = 3;
  cfg.optimizer.lbfgs_epochs = 4;
  CHECK(train(cfg).epochs() <= 7);
  cfg.max_epochs = 2;
  const TrainResult r = train(cfg);
  CHECK(r.epochs() == 2);
  CHECK(r.checkpoint.meta.optimizer == "hybrid");
}

TEST_CASE("target loss stops training") {
  TrainConfig cfg = small_shm(20, OptimizerKind::kAdam, 500);
  const TrainResult free_run = train(cfg);
  cfg.target_loss = free_run.metrics[9].loss_total;
  const TrainResult r = train(cfg);
  CHECK(r.converged());
  CHECK(r.epochs() <= 10);
  CHECK(r.final_loss() <= cfg.target_loss);

  cfg.target_loss = 1e6;
  const TrainResult at_start = train(cfg);
  CHECK(at_start.converged());
  CHECK(at_start.epochs() == 0);
  CHECK(at_start.final_loss() == at_start.initial.total);
}

TEST_CASE("invalid configs are refused") {
  TrainConfig cfg = small_shm(20, OptimizerKind::kAdam, 10);
  cfg.max_epochs = 0;
  CHECK_THROWS_AS(train(cfg), UsageError);
  cfg = small_shm(20, OptimizerKind::kAdam, 10);
  cfg.layer_dims = {2, 8, 1};
  CHECK_THROWS_AS(train(cfg), UsageError);
  cfg = small_shm(20, OptimizerKind::kAdam, 10);
  cfg.target_loss = 0.0;
  CHECK_THROWS_AS(train(cfg), UsageError);
  CHECK_THROWS_AS(parse_optimizer("sgd"), UsageError);
  CHECK(parse_optimizer("lbfgs") == OptimizerKind::kLbfgs);
  CHECK(optimizer_name(OptimizerKind::kHybrid) == "hybrid");
}

TEST_CASE("identical configs give byte-identical metrics") {
  const fs::path dir = scratch_dir("repro");
  for (OptimizerKind kind : {OptimizerKind::kAdam, OptimizerKind::kLbfgs}) {
    const TrainConfig cfg = small_shm(20, kind, 15);
    const TrainResult a = train(cfg);
    const TrainResult b = train(cfg);
    write_metrics_csv(a.metrics, dir / "a.csv");
    write_metrics_csv(b.metrics, dir / "b.csv");
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(a.checkpoint == b.checkpoint);
  }
}

TEST_CASE("threads do not change the trajectory beyond rounding") {
  TrainConfig cfg = small_wave(1.0, 5);
  const TrainResult serial = train(cfg);
  cfg.threads = 3;
  const TrainResult threaded = train(cfg);
  REQUIRE(serial.epochs() == threaded.epochs());
  CHECK(threaded.final_loss() == doctest::Approx(serial.final_loss()).epsilon(1e-6));
}

TEST_CASE("warm start from an identical problem keeps the loss") {
  const TrainConfig base_cfg = small_shm(30, OptimizerKind::kAdam, 25);
  const TrainResult base = train(base_cfg);

  TrainConfig next = base_cfg;
  next.init_params = base.checkpoint.params;
  CHECK(train(next).initial.total == base.final_loss());

  const fs::path dir = scratch_dir("warm");
  const auto [chk, metrics] = persist_run(base, dir);
  CHECK(chk.filename() == "shm_30_adam_25.json");
  CHECK(metrics.filename() == "shm_30_adam_metrics.csv");
  next.init_params.reset();
  next.init_checkpoint = chk;
  CHECK(train(next).initial.total == base.final_loss());

  next.init_checkpoint.reset();
  next.layer_dims = {1, 4, 1};
  next.init_params = base.checkpoint.params;
  CHECK_THROWS_AS(train(next), ArchitectureMismatch);
}

TEST_CASE("warm start at a new frequency starts where the base ended") {
  const TrainResult base = train(small_shm(30, OptimizerKind::kAdam, 25));
  TrainConfig next = small_shm(40, OptimizerKind::kAdam, 5);
  next.init_params = base.checkpoint.params;
  const TrainResult r = train(next);
  const LossBreakdown expect = evaluate_config_loss(next, base.checkpoint.params);
  CHECK(r.initial.total == expect.total);
  CHECK(r.initial.loss_i == doctest::Approx(base.metrics.back().loss_i));
}

TEST_CASE("metrics and field files have fixed headers") {
  const fs::path dir = scratch_dir("csv");
  const TrainResult r = train(small_wave(1.0, 3));
  const auto [chk, metrics] = persist_run(r, dir);
  const std::string text = slurp(metrics);
  CHECK(text.substr(0, text.find('\n')) == kMetricsHeader);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);

  const FieldReport report = evaluate_checkpoint(r.checkpoint, ProblemSpec{WaveParams{1.0}});
  write_field_csv(report, dir / "field.csv");
  const std::string field = slurp(dir / "field.csv");
  CHECK(field.substr(0, field.find('\n')) == "x,t,u_exact,u_pred,abs_err");
  CHECK(static_cast<Eigen::Index>(std::count(field.begin(), field.end(), '\n')) ==
        report.points.cols() + 1);
  CHECK(report.l2_rel_error == doctest::Approx(r.final_l2()));

  const TrainResult shm = train(small_shm(20, OptimizerKind::kAdam, 2));
  const FieldReport shm_report =
      evaluate_checkpoint(shm.checkpoint, ProblemSpec{ShmParams::from_omega0(20)});
  write_field_csv(shm_report, dir / "shm_field.csv");
  std::istringstream lines(slurp(dir / "shm_field.csv"));
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  CHECK(line.rfind("0,", 0) == 0);

  CHECK_THROWS_AS(evaluate_checkpoint(shm.checkpoint, ProblemSpec{WaveParams{1.0}}),
                  ArchitectureMismatch);
}

TEST_CASE("wall time is recorded only on request") {
  TrainConfig cfg = small_shm(20, OptimizerKind::kAdam, 3);
  cfg.record_wall_time = true;
  const TrainResult r = train(cfg);
  CHECK(r.metrics.back().wall_time_ms > 0.0);
  CHECK(r.metrics.front().wall_time_ms <= r.metrics.back().wall_time_ms);
}

TEST_CASE("a hopeless line search stalls the run") {
  TrainConfig cfg = small_shm(20, OptimizerKind::kLbfgs, 50);
  cfg.optimizer.lbfgs.initial_step = 1e8;
  cfg.optimizer.lbfgs.max_trials = 1;
  const TrainResult r = train(cfg);
  CHECK(r.stop == StopReason::kStalled);
  CHECK(r.epochs() == 1);
  CHECK(r.checkpoint.params.flat == train(cfg).checkpoint.params.flat);
  CHECK(r.final_loss() == r.initial.total);
}

TEST_CASE("non-finite losses raise a divergence error") {
  TrainConfig cfg = small_shm(20, OptimizerKind::kAdam, 50);
  cfg.optimizer.adam.learning_rate = 1e300;
  try {
    train(cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK_FALSE(std::isfinite(e.last_metrics().loss_total));
    CHECK(e.last_metrics().epoch <= 10);
  }
}

TEST_CASE("curriculum chains stages") {
  CurriculumSpec spec;
  spec.stages.push_back({"c1", small_wave(1.0, 4)});
  spec.stages.push_back({"c1.5", small_wave(1.5, 3)});
  spec.stages.push_back({"c2", small_wave(2.0, 2)});
  const fs::path dir = scratch_dir("curriculum");
  const std::vector<StageResult> stages = run_curriculum(spec, dir);
  REQUIRE(stages.size() == 3);
  CHECK(stages[0].result.epochs() == 4);
  CHECK(stages[2].result.epochs() == 2);
  for (std::size_t i = 1; i < stages.size(); ++i) {
    const LossBreakdown start =
        evaluate_config_loss(spec.stages[i].config, stages[i - 1].result.checkpoint.params);
    CHECK(stages[i].result.initial.total == start.total);
  }
  CHECK(fs::exists(stages[1].checkpoint_path));
  CHECK(stages[1].checkpoint_path.filename() == "wave_1.5_lbfgs_3.json");
  CHECK(load_checkpoint(stages[2].checkpoint_path) == stages[2].result.checkpoint);

  CHECK(run_curriculum(spec, std::nullopt)[0].checkpoint_path.empty());

  CurriculumSpec mixed = spec;
  mixed.stages[1].config.layer_dims = {2, 4, 1};
  CHECK_THROWS_AS(run_curriculum(mixed, std::nullopt), UsageError);
  CHECK_THROWS_AS(run_curriculum(CurriculumSpec{}, std::nullopt), UsageError);
}

TEST_CASE("a diverging stage aborts the curriculum") {
  CurriculumSpec spec;
  spec.stages.push_back({"ok", small_shm(20, OptimizerKind::kAdam, 2)});
  TrainConfig bad = small_shm(30, OptimizerKind::kAdam, 50);
  bad.optimizer.adam.learning_rate = 1e300;
  spec.stages.push_back({"bad", bad});
  try {
    run_curriculum(spec, std::nullopt);
    FAIL("expected CurriculumError");
  } catch (const CurriculumError& e) {
    REQUIRE(e.completed().size() == 1);
    CHECK(e.completed()[0].id == "ok");
  }
}

}
