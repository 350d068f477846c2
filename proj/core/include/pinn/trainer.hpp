#pragma once

#include "pinn/checkpoint.hpp"
#include "pinn/loss.hpp"
#include "pinn/network.hpp"
#include "pinn/optim.hpp"
#include "pinn/problems.hpp"
#include "pinn/sampling.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinn {

enum class OptimizerKind { kAdam, kLbfgs, kHybrid };

std::string optimizer_name(OptimizerKind kind);
/// Throws UsageError for anything but adam, lbfgs, hybrid.
OptimizerKind parse_optimizer(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kLbfgs;
  optim::AdamOptions adam;
  optim::LbfgsOptions lbfgs;
  // Hybrid only: Adam epochs, then L-BFGS epochs.
  int adam_epochs = 0;
  int lbfgs_epochs = 0;
};

struct TrainConfig {
  ProblemSpec problem;
  std::vector<int> layer_dims;
  SamplingPlan plan;
  LossWeights weights;
  OptimizerConfig optimizer;
  int max_epochs = 1000;
  double target_loss = 1e-3;
  std::uint64_t seed = 0;

  /// Warm start. `init_params` wins over `init_checkpoint` when both are set.
  std::optional<std::filesystem::path> init_checkpoint;
  std::optional<NetworkParams> init_params;

  /// Relative L2 error is recomputed every this many epochs (and at the
  /// last one); rows in between repeat the latest value.
  int l2_every = 50;
  /// When false the wall_time_ms column is written as 0, which keeps
  /// metrics files byte-reproducible.
  bool record_wall_time = false;
  int threads = 1;

  /// Oscillator at omega0: (1, 64x4, 1) network, 100 equidistant points,
  /// w_f = 1e-4, w_i = 1, hybrid Adam 1000 + L-BFGS 5000, target 1e-3.
  static TrainConfig shm_default(double omega0);
  /// Wave equation at c: (2, 64x4, 1) network, Sobol 512/64/32 points,
  /// temporal decay 5, L-BFGS, target 1e-5.
  static TrainConfig wave_default(double c);

  void validate() const;
};

struct MetricsRecord {
  int epoch = 0;
  double loss_total = 0.0;
  double loss_f = 0.0;
  double loss_i = 0.0;
  double loss_b = 0.0;
  double lambda_i = 0.0;
  double l2_rel_error = 0.0;
  double grad_norm = 0.0;
  double wall_time_ms = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "epoch,loss_total,loss_F,loss_I,loss_B,lambda_I,l2_rel_error,grad_norm,wall_time_ms";

void write_metrics_csv(std::span<const MetricsRecord> rows, const std::filesystem::path& path);

enum class StopReason { kTargetReached, kBudgetExhausted, kStalled };

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricsRecord> metrics;
  LossBreakdown initial;  // loss at the starting parameters, epoch 0
  double initial_l2 = 0.0;
  StopReason stop = StopReason::kBudgetExhausted;

  bool converged() const { return stop == StopReason::kTargetReached; }
  int epochs() const { return static_cast<int>(metrics.size()); }
  double final_loss() const { return metrics.empty() ? initial.total : metrics.back().loss_total; }
  double final_l2() const { return metrics.empty() ? initial_l2 : metrics.back().l2_rel_error; }
};

/// Non-finite loss for 5 consecutive epochs.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, MetricsRecord last)
      : std::runtime_error(what), last_(last) {}
  const MetricsRecord& last_metrics() const noexcept { return last_; }

 private:
  MetricsRecord last_;
};

using EpochCallback = std::function<void(const MetricsRecord&)>;

/// One epoch is one full-batch loss/gradient evaluation plus one optimizer
/// update (an L-BFGS iteration with its whole line search). Row e of the
/// metrics describes the parameters after e updates. Stops at max_epochs, at
/// loss_total <= target_loss, or when L-BFGS cannot make progress even from
/// an empty history. Throws ArchitectureMismatch when the warm-start
/// parameters do not fit `layer_dims`.
TrainResult train(const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Loss of `params` under `cfg` at a given epoch of its schedule.
LossBreakdown evaluate_config_loss(const TrainConfig& cfg, const NetworkParams& params,
                                   int epoch = 0);

// ---------------------------------------------------------------------------
// Curriculum

struct CurriculumStage {
  std::string id;
  TrainConfig config;
};

/// Stage i > 0 starts from the final parameters of stage i - 1.
struct CurriculumSpec {
  std::vector<CurriculumStage> stages;
};

struct StageResult {
  std::string id;
  TrainResult result;
  std::filesystem::path checkpoint_path;  // empty when nothing was persisted
  std::filesystem::path metrics_path;
};

class CurriculumError : public std::runtime_error {
 public:
  CurriculumError(const std::string& what, std::vector<StageResult> completed)
      : std::runtime_error(what), completed_(std::move(completed)) {}
  const std::vector<StageResult>& completed() const noexcept { return completed_; }

 private:
  std::vector<StageResult> completed_;
};

/// Runs the stages in order, persisting each stage's checkpoint and metrics
/// under `out_dir` when given. A diverging stage aborts with CurriculumError
/// listing the stages that finished.
std::vector<StageResult> run_curriculum(const CurriculumSpec& spec,
                                        const std::optional<std::filesystem::path>& out_dir,
                                        const EpochCallback& on_epoch = {});

/// Writes `<problem>_<constant>_<optimizer>_<epoch>.json` and the matching
/// `_metrics.csv`; returns both paths.
std::pair<std::filesystem::path, std::filesystem::path> persist_run(
    const TrainResult& result, const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Evaluation

struct FieldReport {
  double l2_rel_error = 0.0;
  Eigen::MatrixXd points;  // one column per grid point
  Eigen::VectorXd exact;
  Eigen::VectorXd prediction;
};

/// Relative L2 error (%) on the problem's evaluation grid plus the field.
FieldReport evaluate_checkpoint(const Checkpoint& chk, const ProblemSpec& problem);

/// CSV with header `x,t,u_exact,u_pred,abs_err`; the oscillator writes x = 0.
void write_field_csv(const FieldReport& report, const std::filesystem::path& path);

}  // namespace pinn
