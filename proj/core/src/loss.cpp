#include "pinn/loss.hpp"

#include "pinn/errors.hpp"

#include <algorithm>
#include <optional>
#include <thread>

namespace pinn {

using ad::Var;

LossWeights LossWeights::shm_default() { return {1e-4, 1.0, 0.0, 0.0}; }

LossWeights LossWeights::wave_default() { return {1.0, 1.0, 1.0, 5.0}; }

void LossWeights::validate() const {
  if (!(w_f >= 0.0) || !(w_i >= 0.0) || !(w_b >= 0.0) || !(temporal_decay >= 0.0)) {
    throw UsageError("loss weights must be non-negative");
  }
  if (w_f == 0.0 && w_i == 0.0 && w_b == 0.0) {
    throw UsageError("at least one loss weight must be positive");
  }
}

double initial_weight(const LossWeights& w, int epoch, int max_epochs) {
  if (max_epochs <= 0) throw UsageError("max_epochs must be positive");
  const double progress = std::clamp(static_cast<double>(epoch) / max_epochs, 0.0, 1.0);
  return w.w_i * (w.temporal_decay * (1.0 - progress) + 1.0);
}

namespace {

// Sum over families of mean squared residuals; empty when there are none.
std::optional<Var> mean_square_term(const std::vector<ResidualFamily>& families) {
  std::optional<Var> term;
  for (const ResidualFamily& f : families) {
    if (f.residual.cols() == 0) continue;
    if (f.count <= 0.0) throw UsageError("residual family with a non-positive count");
    Var part = (1.0 / f.count) * sum(square(f.residual));
    term = term ? *term + part : part;
  }
  return term;
}

ad::Tape* tape_of(const ResidualTerms& terms) {
  for (const auto* group : {&terms.interior, &terms.initial, &terms.boundary}) {
    for (const ResidualFamily& f : *group) {
      if (f.residual.valid()) return f.residual.tape();
    }
  }
  return nullptr;
}

}  // namespace

TapedLoss composite_loss(const ResidualTerms& terms, const LossWeights& weights, int epoch,
                         int max_epochs) {
  weights.validate();
  const double lambda = initial_weight(weights, epoch, max_epochs);

  ad::Tape* tape = tape_of(terms);
  if (tape == nullptr) throw UsageError("composite_loss: no residuals recorded");

  auto f = mean_square_term(terms.interior);
  auto i = mean_square_term(terms.initial);
  auto b = mean_square_term(terms.boundary);
  if (weights.w_f > 0.0 && !f) throw UsageError("interior weight is positive but no interior points");
  if (lambda > 0.0 && !i) throw UsageError("initial weight is positive but no initial points");
  if (weights.w_b > 0.0 && !b) throw UsageError("boundary weight is positive but no boundary points");

  const Var zero = tape->constant(0.0);
  TapedLoss out{zero, f.value_or(zero), i.value_or(zero), b.value_or(zero), {}};
  out.total = weights.w_f * out.loss_f + weights.w_b * out.loss_b + lambda * out.loss_i;
  out.values = {out.total.scalar(), out.loss_f.scalar(), out.loss_i.scalar(), out.loss_b.scalar(),
                lambda};
  return out;
}

LossBreakdown LossParts::breakdown(const LossWeights& w, double lambda_i) const {
  return {w.w_f * loss_f + w.w_b * loss_b + lambda_i * loss_i, loss_f, loss_i, loss_b, lambda_i};
}

optim::Evaluation LossParts::evaluation(const LossWeights& w, double lambda_i) const {
  return {breakdown(w, lambda_i).total, grad_fb + lambda_i * grad_i};
}

namespace {

Eigen::MatrixXd column_chunk(const Eigen::MatrixXd& m, int chunk, int chunks) {
  const Eigen::Index n = m.cols();
  const Eigen::Index begin = n * chunk / chunks;
  const Eigen::Index end = n * (chunk + 1) / chunks;
  return m.middleCols(begin, end - begin);
}

PointSet point_chunk(const PointSet& full, int chunk, int chunks) {
  PointSet out;
  out.interior = column_chunk(full.interior, chunk, chunks);
  for (const auto& side : full.spatial_boundary) {
    out.spatial_boundary.push_back(column_chunk(side, chunk, chunks));
  }
  out.temporal_boundary = column_chunk(full.temporal_boundary, chunk, chunks);
  return out;
}

void set_counts(std::vector<ResidualFamily>& families, double count) {
  for (ResidualFamily& f : families) f.count = count;
}

LossParts evaluate_chunk(const NetworkParams& net, const PointSet& chunk, const PointSet& full,
                         const ProblemSpec& problem, const LossWeights& weights) {
  ad::Tape tape(std::span<const double>(net.flat.data(), static_cast<std::size_t>(net.flat.size())));
  TapedNetwork taped(net, tape);
  ResidualTerms terms = problem_residuals(taped, chunk, problem);
  set_counts(terms.interior, static_cast<double>(full.interior.cols()));
  set_counts(terms.initial, static_cast<double>(full.temporal_boundary.cols()));
  if (!full.spatial_boundary.empty()) {
    set_counts(terms.boundary, static_cast<double>(full.spatial_boundary.front().cols()));
  }

  LossParts parts;
  const Eigen::Index n = net.flat.size();
  parts.grad_fb = Eigen::VectorXd::Zero(n);
  parts.grad_i = Eigen::VectorXd::Zero(n);

  auto f = mean_square_term(terms.interior);
  auto i = mean_square_term(terms.initial);
  auto b = mean_square_term(terms.boundary);
  std::optional<Var> fb;
  if (f) {
    parts.loss_f = f->scalar();
    fb = weights.w_f * *f;
  }
  if (b) {
    parts.loss_b = b->scalar();
    Var wb = weights.w_b * *b;
    fb = fb ? *fb + wb : wb;
  }
  if (fb) parts.grad_fb = tape.backward(*fb);
  if (i) {
    parts.loss_i = i->scalar();
    parts.grad_i = tape.backward(*i);
  }
  return parts;
}

void check_families(const PointSet& points, const LossWeights& weights) {
  weights.validate();
  if (weights.w_f > 0.0 && points.interior.cols() == 0) {
    throw UsageError("interior weight is positive but no interior points");
  }
  if (weights.w_i > 0.0 && points.temporal_boundary.cols() == 0) {
    throw UsageError("initial weight is positive but no initial points");
  }
  Eigen::Index boundary = 0;
  for (const auto& side : points.spatial_boundary) {
    if (side.cols() != points.spatial_boundary.front().cols()) {
      throw UsageError("spatial boundaries must carry equal point counts");
    }
    boundary += side.cols();
  }
  if (weights.w_b > 0.0 && boundary == 0) {
    throw UsageError("boundary weight is positive but no boundary points");
  }
}

}  // namespace

LossParts evaluate_loss_parts(const NetworkParams& net, const PointSet& points,
                              const ProblemSpec& problem, const LossWeights& weights,
                              int threads) {
  check_families(points, weights);
  if (threads <= 1) return evaluate_chunk(net, points, points, problem, weights);

  std::vector<LossParts> results(static_cast<std::size_t>(threads));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  auto work = [&](int c) {
    try {
      results[static_cast<std::size_t>(c)] =
          evaluate_chunk(net, point_chunk(points, c, threads), points, problem, weights);
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (int c = 1; c < threads; ++c) pool.emplace_back(work, c);
  work(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  LossParts total = std::move(results.front());
  for (std::size_t c = 1; c < results.size(); ++c) {
    total.loss_f += results[c].loss_f;
    total.loss_i += results[c].loss_i;
    total.loss_b += results[c].loss_b;
    total.grad_fb += results[c].grad_fb;
    total.grad_i += results[c].grad_i;
  }
  return total;
}

double relative_l2(const Eigen::VectorXd& prediction, const Eigen::VectorXd& exact) {
  if (prediction.size() != exact.size()) throw UsageError("relative_l2: length mismatch");
  const double denom = exact.norm();
  if (denom == 0.0) throw DomainError("relative_l2: exact field is identically zero");
  return 100.0 * (prediction - exact).norm() / denom;
}

double relative_l2_error(const NetworkParams& net, const ProblemSpec& problem) {
  const Eigen::MatrixXd grid = evaluation_grid(problem);
  const Eigen::VectorXd pred = evaluate(net, grid).row(0).transpose();
  return relative_l2(pred, exact_on(problem, grid));
}

}  // namespace pinn
