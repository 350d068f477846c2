#include "pinn/trainer.hpp"

#include "pinn/errors.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <chrono>
#include <cmath>
#include <limits>

namespace pinn {

std::string optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kLbfgs: return "lbfgs";
    case OptimizerKind::kHybrid: return "hybrid";
  }
  return "unknown";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "lbfgs") return OptimizerKind::kLbfgs;
  if (name == "hybrid") return OptimizerKind::kHybrid;
  throw UsageError("unknown optimizer '" + name + "' (expected adam, lbfgs or hybrid)");
}

TrainConfig TrainConfig::shm_default(double omega0) {
  TrainConfig cfg;
  cfg.problem = ProblemSpec{ShmParams::from_omega0(omega0)};
  cfg.layer_dims = {1, 64, 64, 64, 64, 1};
  cfg.plan = SamplingPlan::shm_default();
  cfg.weights = LossWeights::shm_default();
  cfg.optimizer.kind = OptimizerKind::kHybrid;
  cfg.optimizer.adam_epochs = 1000;
  cfg.optimizer.lbfgs_epochs = 5000;
  cfg.max_epochs = 6000;
  cfg.target_loss = 1e-3;
  return cfg;
}

TrainConfig TrainConfig::wave_default(double c) {
  TrainConfig cfg;
  cfg.problem = ProblemSpec{WaveParams{c}};
  cfg.layer_dims = {2, 64, 64, 64, 64, 1};
  cfg.plan = SamplingPlan::wave_default();
  cfg.weights = LossWeights::wave_default();
  cfg.optimizer.kind = OptimizerKind::kLbfgs;
  cfg.max_epochs = 5000;
  cfg.target_loss = 1e-5;
  cfg.l2_every = 100;
  return cfg;
}

void TrainConfig::validate() const {
  problem.validate();
  validate_dims(layer_dims);
  if (layer_dims.front() != problem.input_width()) {
    throw UsageError("network input width " + std::to_string(layer_dims.front()) +
                     " does not match the " + problem.kind() + " problem");
  }
  if (layer_dims.back() != 1) throw UsageError("network output width must be 1");
  weights.validate();
  if (max_epochs <= 0) throw UsageError("max_epochs must be positive");
  if (!(target_loss > 0.0)) throw UsageError("target_loss must be positive");
  if (l2_every <= 0) throw UsageError("l2_every must be positive");
  if (threads <= 0) throw UsageError("threads must be positive");
  if (optimizer.kind == OptimizerKind::kHybrid &&
      (optimizer.adam_epochs < 0 || optimizer.lbfgs_epochs < 0)) {
    throw UsageError("hybrid epoch counts must be >= 0");
  }
  if (optimizer.lbfgs.memory <= 0 || optimizer.lbfgs.max_trials <= 0 ||
      !(optimizer.lbfgs.initial_step > 0.0)) {
    throw UsageError("invalid L-BFGS settings");
  }
  if (!(optimizer.lbfgs.c1 > 0.0 && optimizer.lbfgs.c1 < optimizer.lbfgs.c2 &&
        optimizer.lbfgs.c2 < 1.0)) {
    throw UsageError("line search needs 0 < c1 < c2 < 1");
  }
  if (!(optimizer.adam.learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
}

void write_metrics_csv(std::span<const MetricsRecord> rows, const std::filesystem::path& path) {
  auto out = fmt::output_file(path.string());
  out.print("{}\n", kMetricsHeader);
  for (const MetricsRecord& r : rows) {
    out.print("{},{},{},{},{},{},{},{},{}\n", r.epoch, r.loss_total, r.loss_f, r.loss_i, r.loss_b,
              r.lambda_i, r.l2_rel_error, r.grad_norm, r.wall_time_ms);
  }
}

namespace {

NetworkParams starting_params(const TrainConfig& cfg) {
  NetworkParams net;
  if (cfg.init_params) {
    net = *cfg.init_params;
  } else if (cfg.init_checkpoint) {
    net = load_checkpoint(*cfg.init_checkpoint).params;
  } else {
    return init_network(cfg.layer_dims, cfg.seed);
  }
  if (net.layer_dims != cfg.layer_dims) {
    throw ArchitectureMismatch("warm-start network does not match the configured layer dims");
  }
  validate(net);
  return net;
}

LossParts non_finite_parts(Eigen::Index n) {
  const double inf = std::numeric_limits<double>::infinity();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {inf, inf, inf, Eigen::VectorXd::Constant(n, nan), Eigen::VectorXd::Constant(n, nan)};
}

optim::HybridSchedule make_schedule(const TrainConfig& cfg, Eigen::Index n) {
  const OptimizerConfig& o = cfg.optimizer;
  switch (o.kind) {
    case OptimizerKind::kAdam:
      return {cfg.max_epochs, 0, o.adam, o.lbfgs, n};
    case OptimizerKind::kLbfgs:
      return {0, cfg.max_epochs, o.adam, o.lbfgs, n};
    case OptimizerKind::kHybrid:
      break;
  }
  return {o.adam_epochs, o.lbfgs_epochs, o.adam, o.lbfgs, n};
}

constexpr int kDivergenceLimit = 5;

}  // namespace

LossBreakdown evaluate_config_loss(const TrainConfig& cfg, const NetworkParams& params,
                                   int epoch) {
  cfg.validate();
  const PointSet points = build_point_set(cfg.plan, cfg.problem);
  const LossParts parts = evaluate_loss_parts(params, points, cfg.problem, cfg.weights, cfg.threads);
  return parts.breakdown(cfg.weights, initial_weight(cfg.weights, epoch, cfg.max_epochs));
}

TrainResult train(const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const PointSet points = build_point_set(cfg.plan, cfg.problem);

  NetworkParams net = starting_params(cfg);
  const Eigen::Index n = net.flat.size();

  // Scratch network the objective evaluates trial points on.
  NetworkParams trial = net;
  LossParts last_parts;
  auto evaluate_parts = [&](const Eigen::VectorXd& x) {
    trial.flat = x;
    try {
      return evaluate_loss_parts(trial, points, cfg.problem, cfg.weights, cfg.threads);
    } catch (const NumericError&) {
      return non_finite_parts(n);
    }
  };

  double lambda = initial_weight(cfg.weights, 0, cfg.max_epochs);
  const optim::Objective objective = [&](const Eigen::VectorXd& x) {
    last_parts = evaluate_parts(x);
    return last_parts.evaluation(cfg.weights, lambda);
  };

  LossParts parts = evaluate_parts(net.flat);
  TrainResult result;
  result.initial = parts.breakdown(cfg.weights, lambda);

  optim::HybridSchedule schedule = make_schedule(cfg, n);
  const int budget = std::min(cfg.max_epochs, schedule.total_epochs());

  double l2 = relative_l2_error(net, cfg.problem);
  result.initial_l2 = l2;
  int non_finite_streak = 0;
  bool lbfgs_reset = false;
  result.stop = StopReason::kBudgetExhausted;

  if (result.initial.total <= cfg.target_loss) {
    result.stop = StopReason::kTargetReached;
  }

  for (int epoch = 0; epoch < budget && result.stop != StopReason::kTargetReached; ++epoch) {
    lambda = initial_weight(cfg.weights, epoch, cfg.max_epochs);
    optim::Evaluation current = parts.evaluation(cfg.weights, lambda);

    bool stalled = false;
    try {
      const optim::StepReport report = schedule.step(epoch, net.flat, current, objective);
      if (report.accepted) {
        if (report.step_size != 0.0 || !schedule.uses_lbfgs(epoch)) parts = last_parts;
        lbfgs_reset = false;
      } else if (lbfgs_reset || schedule.lbfgs().history.empty()) {
        stalled = true;
      } else {
        schedule.lbfgs().reset();
        lbfgs_reset = true;
      }
    } catch (const NumericError&) {
      // Non-finite loss or gradient at the current point: no update.
    }

    const double next_lambda = initial_weight(cfg.weights, epoch + 1, cfg.max_epochs);
    const LossBreakdown bd = parts.breakdown(cfg.weights, next_lambda);
    const int done = epoch + 1;
    const bool finite = std::isfinite(bd.total);
    const bool last = done == budget || stalled || (finite && bd.total <= cfg.target_loss);
    if (finite && (done % cfg.l2_every == 0 || last)) l2 = relative_l2_error(net, cfg.problem);

    MetricsRecord row;
    row.epoch = done;
    row.loss_total = bd.total;
    row.loss_f = bd.loss_f;
    row.loss_i = bd.loss_i;
    row.loss_b = bd.loss_b;
    row.lambda_i = bd.lambda_i;
    row.l2_rel_error = l2;
    row.grad_norm = (parts.grad_fb + next_lambda * parts.grad_i).norm();
    if (cfg.record_wall_time) {
      row.wall_time_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
              .count();
    }
    result.metrics.push_back(row);
    if (on_epoch) on_epoch(row);

    non_finite_streak = finite ? 0 : non_finite_streak + 1;
    if (non_finite_streak >= kDivergenceLimit) {
      throw DivergenceError("loss was non-finite for " + std::to_string(kDivergenceLimit) +
                                " consecutive epochs",
                            row);
    }
    if (finite && bd.total <= cfg.target_loss) {
      result.stop = StopReason::kTargetReached;
    } else if (stalled) {
      result.stop = StopReason::kStalled;
      break;
    }
  }

  result.checkpoint.params = std::move(net);
  result.checkpoint.meta.problem_kind = cfg.problem.kind();
  result.checkpoint.meta.problem_constant = cfg.problem.constant();
  result.checkpoint.meta.optimizer = optimizer_name(cfg.optimizer.kind);
  result.checkpoint.meta.epoch = result.epochs();
  result.checkpoint.meta.final_loss = result.final_loss();
  result.checkpoint.meta.seed = cfg.seed;
  return result;
}

std::pair<std::filesystem::path, std::filesystem::path> persist_run(
    const TrainResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const CheckpointMeta& meta = result.checkpoint.meta;
  const auto checkpoint_path = out_dir / checkpoint_file_name(meta);
  const auto metrics_path = out_dir / (meta.problem_kind + "_" +
                                       format_constant(meta.problem_constant) + "_" +
                                       meta.optimizer + "_metrics.csv");
  save_checkpoint(result.checkpoint, checkpoint_path);
  write_metrics_csv(result.metrics, metrics_path);
  return {checkpoint_path, metrics_path};
}

std::vector<StageResult> run_curriculum(const CurriculumSpec& spec,
                                        const std::optional<std::filesystem::path>& out_dir,
                                        const EpochCallback& on_epoch) {
  if (spec.stages.empty()) throw UsageError("curriculum needs at least one stage");
  const std::vector<int>& dims = spec.stages.front().config.layer_dims;
  for (const CurriculumStage& stage : spec.stages) {
    if (stage.config.layer_dims != dims) {
      throw UsageError("curriculum stages must share one network architecture");
    }
    stage.config.validate();
  }

  std::vector<StageResult> done;
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    TrainConfig cfg = spec.stages[i].config;
    if (i > 0) {
      cfg.init_params = done.back().result.checkpoint.params;
      cfg.init_checkpoint.reset();
    }
    StageResult stage{spec.stages[i].id, {}, {}, {}};
    try {
      stage.result = train(cfg, on_epoch);
    } catch (const DivergenceError& e) {
      throw CurriculumError("stage '" + stage.id + "' diverged after " +
                                std::to_string(done.size()) + " completed stage(s): " + e.what(),
                            std::move(done));
    }
    if (out_dir) {
      std::tie(stage.checkpoint_path, stage.metrics_path) = persist_run(stage.result, *out_dir);
    }
    done.push_back(std::move(stage));
  }
  return done;
}

FieldReport evaluate_checkpoint(const Checkpoint& chk, const ProblemSpec& problem) {
  problem.validate();
  validate(chk.params);
  if (chk.params.input_width() != problem.input_width() || chk.params.output_width() != 1) {
    throw ArchitectureMismatch("checkpoint network does not fit the " + problem.kind() +
                               " problem");
  }
  FieldReport report;
  report.points = evaluation_grid(problem);
  report.exact = exact_on(problem, report.points);
  report.prediction = evaluate(chk.params, report.points).row(0).transpose();
  report.l2_rel_error = relative_l2(report.prediction, report.exact);
  return report;
}

void write_field_csv(const FieldReport& report, const std::filesystem::path& path) {
  auto out = fmt::output_file(path.string());
  out.print("x,t,u_exact,u_pred,abs_err\n");
  const bool one_d = report.points.rows() == 1;
  for (Eigen::Index i = 0; i < report.points.cols(); ++i) {
    const double x = one_d ? 0.0 : report.points(0, i);
    const double t = one_d ? report.points(0, i) : report.points(1, i);
    out.print("{},{},{},{},{}\n", x, t, report.exact[i], report.prediction[i],
              std::abs(report.prediction[i] - report.exact[i]));
  }
}

}  // namespace pinn
