#include "pinn/optim.hpp"

#include "pinn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pinn::optim {

void adam_step(AdamState& state, Vector& params, const Vector& grad) {
  if (grad.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw UsageError("adam_step: dimension mismatch");
  }
  if (!grad.allFinite()) throw NumericError("adam", "adam_step: non-finite gradient");

  const AdamOptions& o = state.options;
  state.t += 1;
  state.m = o.beta1 * state.m + (1.0 - o.beta1) * grad;
  state.v = o.beta2 * state.v + (1.0 - o.beta2) * grad.cwiseAbs2();
  const double mc = 1.0 - std::pow(o.beta1, static_cast<double>(state.t));
  const double vc = 1.0 - std::pow(o.beta2, static_cast<double>(state.t));
  params.array() -=
      o.learning_rate * (state.m.array() / mc) / ((state.v.array() / vc).sqrt() + o.epsilon);
}

Vector lbfgs_direction(const LbfgsState& state, const Vector& grad) {
  if (state.options.dense) {
    if (state.dense_inverse.size() == 0) return -grad;
    return -(state.dense_inverse * grad);
  }
  const auto& h = state.history;
  Vector q = grad;
  std::vector<double> alpha(h.size());
  for (std::size_t i = h.size(); i-- > 0;) {
    alpha[i] = h[i].rho * h[i].s.dot(q);
    q -= alpha[i] * h[i].y;
  }
  if (!h.empty()) {
    const CurvaturePair& last = h.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double beta = h[i].rho * h[i].y.dot(q);
    q += (alpha[i] - beta) * h[i].s;
  }
  return -q;
}

namespace {

struct Sample {
  double alpha;
  double phi;
  double dphi;
};

// Minimizer of the cubic matching value and slope at both ends, or bisection
// when the cubic has no usable minimizer. Safeguarded into the interior.
double cubic_step(const Sample& a, const Sample& b) {
  const double lo = std::min(a.alpha, b.alpha);
  const double hi = std::max(a.alpha, b.alpha);
  const double mid = 0.5 * (lo + hi);
  if (!std::isfinite(b.phi) || !std::isfinite(b.dphi)) return mid;

  const double d1 = a.dphi + b.dphi - 3.0 * (a.phi - b.phi) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.dphi * b.dphi;
  if (disc < 0.0) return mid;
  const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
  const double denom = b.dphi - a.dphi + 2.0 * d2;
  if (denom == 0.0) return mid;
  const double next = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / denom;
  if (!std::isfinite(next)) return mid;
  const double margin = 0.1 * (hi - lo);
  return std::clamp(next, lo + margin, hi - margin);
}

}  // namespace

LineSearchResult strong_wolfe(const Objective& objective, const Vector& x, const Evaluation& start,
                              const Vector& direction, double initial_step, double c1, double c2,
                              int max_trials) {
  LineSearchResult result;
  const double phi0 = start.loss;
  const double dphi0 = start.grad.dot(direction);
  if (!(dphi0 < 0.0)) return result;

  auto probe = [&](double alpha, Evaluation& out) {
    ++result.evaluations;
    out = objective(x + alpha * direction);
    double dphi = out.grad.size() == direction.size() ? out.grad.dot(direction)
                                                      : std::numeric_limits<double>::quiet_NaN();
    return Sample{alpha, out.loss, dphi};
  };
  auto sufficient = [&](const Sample& s) {
    return std::isfinite(s.phi) && s.phi <= phi0 + c1 * s.alpha * dphi0;
  };
  auto curvature = [&](const Sample& s) {
    return std::isfinite(s.dphi) && std::abs(s.dphi) <= -c2 * dphi0;
  };

  auto zoom = [&](Sample lo, Sample hi) {
    while (result.evaluations < max_trials) {
      const double alpha = cubic_step(lo, hi);
      if (alpha == lo.alpha || alpha == hi.alpha) break;
      Evaluation eval;
      const Sample s = probe(alpha, eval);
      if (!sufficient(s) || s.phi >= lo.phi) {
        hi = s;
        continue;
      }
      if (curvature(s)) {
        result.success = true;
        result.alpha = alpha;
        result.at = std::move(eval);
        return;
      }
      if (s.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = s;
    }
  };

  Sample prev{0.0, phi0, dphi0};
  double alpha = initial_step;
  while (result.evaluations < max_trials) {
    Evaluation eval;
    const Sample s = probe(alpha, eval);
    if (!sufficient(s) || (result.evaluations > 1 && s.phi >= prev.phi)) {
      zoom(prev, s);
      return result;
    }
    if (curvature(s)) {
      result.success = true;
      result.alpha = alpha;
      result.at = std::move(eval);
      return result;
    }
    if (s.dphi >= 0.0) {
      zoom(s, prev);
      return result;
    }
    prev = s;
    alpha *= 2.0;
  }
  return result;
}

namespace {

void push_pair(LbfgsState& state, Vector s, Vector y) {
  const double sy = s.dot(y);
  if (!(sy > state.options.curvature_threshold)) {
    ++state.skipped_pairs;
    return;
  }
  if (state.options.dense) {
    const Eigen::Index n = s.size();
    if (state.dense_inverse.size() == 0) {
      state.dense_inverse = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
    }
    const double rho = 1.0 / sy;
    const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
    state.dense_inverse =
        left * state.dense_inverse * left.transpose() + rho * s * s.transpose();
    return;
  }
  state.history.push_back({std::move(s), std::move(y), 1.0 / sy});
  while (static_cast<int>(state.history.size()) > state.options.memory) {
    state.history.pop_front();
  }
}

}  // namespace

StepReport lbfgs_step(LbfgsState& state, Vector& params, Evaluation& current,
                      const Objective& objective) {
  if (current.grad.size() != params.size()) throw UsageError("lbfgs_step: dimension mismatch");
  if (!std::isfinite(current.loss) || !current.grad.allFinite()) {
    throw NumericError("lbfgs", "lbfgs_step: non-finite loss at the current point");
  }

  StepReport report;
  report.loss_before = current.loss;
  report.loss_after = current.loss;
  report.grad_norm = current.grad.norm();
  if (report.grad_norm == 0.0) {
    report.accepted = true;
    return report;
  }

  Vector direction = lbfgs_direction(state, current.grad);
  if (!(direction.dot(current.grad) < 0.0)) direction = -current.grad;

  const LbfgsOptions& o = state.options;
  LineSearchResult ls = strong_wolfe(objective, params, current, direction, o.initial_step, o.c1,
                                     o.c2, o.max_trials);
  report.evaluations = ls.evaluations;
  if (!ls.success) return report;

  Vector s = ls.alpha * direction;
  Vector y = ls.at.grad - current.grad;
  params += s;
  current = std::move(ls.at);
  push_pair(state, std::move(s), std::move(y));

  report.accepted = true;
  report.step_size = ls.alpha;
  report.loss_after = current.loss;
  report.grad_norm = current.grad.norm();
  return report;
}

HybridSchedule::HybridSchedule(int adam_epochs, int lbfgs_epochs, AdamOptions adam,
                               LbfgsOptions lbfgs, Eigen::Index dimension)
    : adam_epochs_(adam_epochs), lbfgs_epochs_(lbfgs_epochs), adam_(dimension, adam),
      lbfgs_(lbfgs) {
  if (adam_epochs < 0 || lbfgs_epochs < 0) throw UsageError("hybrid epoch counts must be >= 0");
}

StepReport HybridSchedule::step(int epoch, Vector& params, Evaluation& current,
                                const Objective& objective) {
  if (uses_lbfgs(epoch)) return lbfgs_step(lbfgs_, params, current, objective);

  StepReport report;
  report.loss_before = current.loss;
  adam_step(adam_, params, current.grad);
  current = objective(params);
  report.evaluations = 1;
  report.accepted = true;
  report.step_size = adam_.options.learning_rate;
  report.loss_after = current.loss;
  report.grad_norm = current.grad.norm();
  return report;
}

std::vector<StepReport> hybrid_schedule(int adam_epochs, int lbfgs_epochs, Vector& params,
                                        const Objective& objective, AdamOptions adam,
                                        LbfgsOptions lbfgs) {
  HybridSchedule schedule(adam_epochs, lbfgs_epochs, adam, lbfgs, params.size());
  std::vector<StepReport> reports;
  Evaluation current = objective(params);
  for (int epoch = 0; epoch < schedule.total_epochs(); ++epoch) {
    reports.push_back(schedule.step(epoch, params, current, objective));
  }
  return reports;
}

}  // namespace pinn::optim
