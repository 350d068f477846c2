#pragma once

#include "pinn/network.hpp"
#include "pinn/optim.hpp"
#include "pinn/problems.hpp"
#include "pinn/sampling.hpp"

#include <Eigen/Core>

namespace pinn {

/// Weights of the interior (F), initial-condition (I) and boundary (B)
/// terms. With `temporal_decay` > 0 the initial-condition weight decays over
/// training: w_i * (temporal_decay * (1 - epoch / max_epochs) + 1).
struct LossWeights {
  double w_f = 1.0;
  double w_i = 1.0;
  double w_b = 1.0;
  double temporal_decay = 0.0;

  static LossWeights shm_default();
  static LossWeights wave_default();

  /// Throws UsageError for negative weights or when all are zero.
  void validate() const;
};

struct LossBreakdown {
  double total = 0.0;
  double loss_f = 0.0;
  double loss_i = 0.0;
  double loss_b = 0.0;
  double lambda_i = 0.0;  // weight applied to loss_i
};

/// lambda_I = C_t (1 - epoch / max_epochs) + 1, scaled by w_i.
double initial_weight(const LossWeights& w, int epoch, int max_epochs);

/// Loss terms recorded on the tape together with their values.
struct TapedLoss {
  ad::Var total;
  ad::Var loss_f;
  ad::Var loss_i;
  ad::Var loss_b;
  LossBreakdown values;
};

/// Each term is the sum over its families of mean squared residuals.
/// Throws UsageError when a term with positive weight has no points.
TapedLoss composite_loss(const ResidualTerms& terms, const LossWeights& weights, int epoch,
                         int max_epochs);

/// Loss terms and their parameter gradients, kept apart so that the
/// initial-condition weight can be changed without re-evaluating.
struct LossParts {
  double loss_f = 0.0;
  double loss_i = 0.0;
  double loss_b = 0.0;
  Eigen::VectorXd grad_fb;  // d(w_f L_F + w_b L_B)/d(theta)
  Eigen::VectorXd grad_i;   // d(L_I)/d(theta)

  LossBreakdown breakdown(const LossWeights& w, double lambda_i) const;
  optim::Evaluation evaluation(const LossWeights& w, double lambda_i) const;
};

/// Full-batch loss and gradients. With threads > 1 the point sets are split
/// into contiguous chunks, one tape each, and chunk results are summed in
/// chunk order, so the result depends on the thread count but not on
/// scheduling.
LossParts evaluate_loss_parts(const NetworkParams& net, const PointSet& points,
                              const ProblemSpec& problem, const LossWeights& weights,
                              int threads = 1);

/// 100 * ||prediction - exact|| / ||exact||. Throws DomainError when exact
/// is identically zero and UsageError on length mismatch.
double relative_l2(const Eigen::VectorXd& prediction, const Eigen::VectorXd& exact);

/// Relative L2 error (%) of the network on the problem's evaluation grid.
double relative_l2_error(const NetworkParams& net, const ProblemSpec& problem);

}  // namespace pinn
