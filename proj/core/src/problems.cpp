#include "pinn/problems.hpp"

#include "pinn/errors.hpp"
#include "pinn/sampling.hpp"

#include <string>

namespace pinn {

using ad::Var;

ShmParams ShmParams::from_omega0(double omega0, double mass, double friction, double t_end) {
  ShmParams p{mass, friction, mass * omega0 * omega0, t_end};
  p.validate();
  return p;
}

void ShmParams::validate() const {
  const bool finite = std::isfinite(mass) && std::isfinite(friction) && std::isfinite(stiffness) &&
                      std::isfinite(t_end);
  if (!finite || mass <= 0.0 || stiffness <= 0.0 || friction < 0.0 || t_end <= 0.0) {
    throw DomainError("oscillator constants must be finite with m, k, t_end > 0 and mu >= 0");
  }
  if (!(delta() < omega0())) {
    throw DomainError("oscillator is not under-damped (delta = " + std::to_string(delta()) +
                      ", omega0 = " + std::to_string(omega0()) + ")");
  }
}

void WaveParams::validate() const {
  if (!std::isfinite(c) || c <= 0.0) throw DomainError("wave velocity must be positive");
}

void ProblemSpec::validate() const {
  std::visit([](const auto& p) { p.validate(); }, params);
}

double wave_exact(double x, double t, const WaveParams& p) {
  const double ct = p.c * t;
  return std::sin(x) * (std::cos(ct) + std::sin(ct) / p.c);
}

namespace {

ResidualFamily family(Var residual) {
  return {residual, static_cast<double>(residual.cols())};
}

bool empty(const Eigen::MatrixXd& m) { return m.cols() == 0; }

}  // namespace

ResidualTerms shm_residuals(const TapedNetwork& net, const PointSet& points, const ShmParams& p) {
  if (net.params().input_width() != 1) {
    throw UsageError("the oscillator needs a network with input width 1");
  }
  ResidualTerms terms;
  constexpr int kTime[] = {0};
  if (!empty(points.interior)) {
    AxisJets u = net.forward_axes(points.interior, kTime);
    terms.interior.push_back(family(shm_interior_residual(u.value, u.d1[0], u.d2[0], p)));
  }
  if (!empty(points.temporal_boundary)) {
    AxisJets u0 = net.forward_axes(points.temporal_boundary, kTime);
    terms.initial.push_back(family(u0.value - 1.0));
    terms.initial.push_back(family(u0.d1[0]));
  }
  return terms;
}

ResidualTerms wave_residuals(const TapedNetwork& net, const PointSet& points,
                             const WaveParams& p) {
  if (net.params().input_width() != 2) {
    throw UsageError("the wave equation needs a network with input width 2");
  }
  ad::Tape& tape = net.tape();
  ResidualTerms terms;
  if (!empty(points.interior)) {
    constexpr int kBoth[] = {0, 1};
    AxisJets u = net.forward_axes(points.interior, kBoth);
    terms.interior.push_back(family(wave_interior_residual(u.d2[1], u.d2[0], p)));
  }
  for (const Eigen::MatrixXd& side : points.spatial_boundary) {
    if (empty(side)) continue;
    terms.boundary.push_back(family(net.forward(side)));
  }
  if (!empty(points.temporal_boundary)) {
    constexpr int kTime[] = {1};
    AxisJets u0 = net.forward_axes(points.temporal_boundary, kTime);
    Var sin_x = tape.constant(points.temporal_boundary.row(0).array().sin().matrix());
    terms.initial.push_back(family(u0.value - sin_x));
    terms.initial.push_back(family(u0.d1[0] - sin_x));
  }
  return terms;
}

ResidualTerms problem_residuals(const TapedNetwork& net, const PointSet& points,
                                const ProblemSpec& problem) {
  problem.validate();
  if (problem.is_shm()) return shm_residuals(net, points, problem.shm());
  return wave_residuals(net, points, problem.wave());
}

Var shm_residual(const NetworkParams& net, ad::Tape& tape, double t, const ShmParams& p) {
  const double point[] = {t};
  ad::JetVar u = nested_second_derivative(net, tape, point, 0);
  return shm_interior_residual(u.val, u.d1, u.d2, p);
}

Eigen::MatrixXd evaluation_grid(const ProblemSpec& problem) {
  problem.validate();
  if (problem.is_shm()) {
    const auto t = equidistant(1000, 0.0, problem.shm().t_end);
    Eigen::MatrixXd grid(1, 1000);
    for (int i = 0; i < 1000; ++i) grid(0, i) = t[static_cast<std::size_t>(i)];
    return grid;
  }
  constexpr int n = 100;
  const auto xs = equidistant(n, 0.0, WaveParams::x_end);
  const auto ts = equidistant(n, 0.0, WaveParams::t_end);
  Eigen::MatrixXd grid(2, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      grid(0, i * n + j) = xs[static_cast<std::size_t>(i)];
      grid(1, i * n + j) = ts[static_cast<std::size_t>(j)];
    }
  }
  return grid;
}

Eigen::VectorXd exact_on(const ProblemSpec& problem, const Eigen::MatrixXd& points) {
  if (points.rows() != problem.input_width()) {
    throw UsageError("point dimension does not match the problem");
  }
  Eigen::VectorXd out(points.cols());
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    out[i] = problem.is_shm() ? shm_exact(points(0, i), problem.shm())
                              : wave_exact(points(0, i), points(1, i), problem.wave());
  }
  return out;
}

}  // namespace pinn
