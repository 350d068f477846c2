#pragma once

#include <Eigen/Core>

#include <deque>
#include <functional>
#include <string_view>
#include <vector>

namespace pinn::optim {

using Vector = Eigen::VectorXd;

/// Loss and gradient at one parameter vector.
struct Evaluation {
  double loss = 0.0;
  Vector grad;
};

/// Must be deterministic for a fixed argument.
using Objective = std::function<Evaluation(const Vector&)>;

struct StepReport {
  double loss_before = 0.0;
  double loss_after = 0.0;
  double grad_norm = 0.0;  // at the parameters after the step
  double step_size = 0.0;
  bool accepted = false;
  int evaluations = 0;
};

// ---------------------------------------------------------------------------
// Adam

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(Eigen::Index n, AdamOptions opts)
      : m(Vector::Zero(n)), v(Vector::Zero(n)), options(opts) {}

  Vector m;
  Vector v;
  long t = 0;
  AdamOptions options;
};

/// One bias-corrected Adam update; `t` is incremented before use.
/// Throws NumericError (state untouched) if the gradient is not finite.
void adam_step(AdamState& state, Vector& params, const Vector& grad);

// ---------------------------------------------------------------------------
// L-BFGS

struct LbfgsOptions {
  int memory = 10;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_trials = 25;
  /// First trial step of every line search. A "learning rate" for L-BFGS
  /// is read as this scale.
  double initial_step = 1.0;
  /// Pairs with s.y at or below this are discarded.
  double curvature_threshold = 1e-10;
  /// Keep a dense inverse-Hessian BFGS update instead of the two-loop
  /// recursion. Only sensible for tiny problems (cross-checking).
  bool dense = false;
};

struct CurvaturePair {
  Vector s;
  Vector y;
  double rho;  // 1 / (s.y)
};

struct LbfgsState {
  LbfgsState() = default;
  explicit LbfgsState(LbfgsOptions opts) : options(opts) {}

  LbfgsOptions options;
  std::deque<CurvaturePair> history;
  Eigen::MatrixXd dense_inverse;  // dense mode only; empty until first pair
  int skipped_pairs = 0;

  void reset() {
    history.clear();
    dense_inverse.resize(0, 0);
  }
};

/// Two-loop recursion over the history: returns -H g, H the implicit
/// inverse-Hessian estimate (gamma = s.y / y.y of the newest pair as
/// initial scaling, identity when empty).
Vector lbfgs_direction(const LbfgsState& state, const Vector& grad);

/// One quasi-Newton iteration with a strong-Wolfe line search.
///
/// `current` must hold the loss and gradient at `params`; on acceptance both
/// are advanced to the new point. On line-search failure params, current and
/// history are left as they were and `accepted` is false. Throws
/// NumericError when the starting loss is not finite.
StepReport lbfgs_step(LbfgsState& state, Vector& params, Evaluation& current,
                      const Objective& objective);

// ---------------------------------------------------------------------------
// Strong-Wolfe line search

struct LineSearchResult {
  bool success = false;
  double alpha = 0.0;
  Evaluation at;  // evaluation at x + alpha d when successful
  int evaluations = 0;
};

LineSearchResult strong_wolfe(const Objective& objective, const Vector& x, const Evaluation& start,
                              const Vector& direction, double initial_step, double c1, double c2,
                              int max_trials);

// ---------------------------------------------------------------------------
// Adam then L-BFGS

/// Adam for the first `adam_epochs` epochs, then L-BFGS with a fresh history.
class HybridSchedule {
 public:
  HybridSchedule(int adam_epochs, int lbfgs_epochs, AdamOptions adam, LbfgsOptions lbfgs,
                 Eigen::Index dimension);

  int adam_epochs() const { return adam_epochs_; }
  int lbfgs_epochs() const { return lbfgs_epochs_; }
  int total_epochs() const { return adam_epochs_ + lbfgs_epochs_; }
  bool uses_lbfgs(int epoch) const { return epoch >= adam_epochs_; }

  /// Runs update number `epoch` (0-based). `current` holds the loss and
  /// gradient at `params` and is advanced with them.
  StepReport step(int epoch, Vector& params, Evaluation& current, const Objective& objective);

  LbfgsState& lbfgs() { return lbfgs_; }
  const AdamState& adam() const { return adam_; }

 private:
  int adam_epochs_;
  int lbfgs_epochs_;
  AdamState adam_;
  LbfgsState lbfgs_;
};

/// Runs the whole schedule; one report per epoch.
std::vector<StepReport> hybrid_schedule(int adam_epochs, int lbfgs_epochs, Vector& params,
                                        const Objective& objective, AdamOptions adam = {},
                                        LbfgsOptions lbfgs = {});

}  // namespace pinn::optim
