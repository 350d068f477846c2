#pragma once

#include "pinn/network.hpp"
#include "pinn/tape.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace pinn {

/// Damped oscillator m u'' + mu u' + k u = 0 with u(0) = 1, u'(0) = 0 on
/// [0, t_end]. Only the under-damped regime is accepted.
struct ShmParams {
  double mass = 1.0;
  double friction = 4.0;
  double stiffness = 400.0;
  double t_end = 1.0;

  /// k = m * omega0^2.
  static ShmParams from_omega0(double omega0, double mass = 1.0, double friction = 4.0,
                               double t_end = 1.0);

  double delta() const { return friction / (2.0 * mass); }
  double omega0() const { return std::sqrt(stiffness / mass); }
  double omega() const { return std::sqrt(omega0() * omega0() - delta() * delta()); }
  /// Phase and amplitude of u = e^{-delta t} 2A cos(phi + omega t) fixed by
  /// the initial conditions: 2A cos(phi) = 1, tan(phi) = -delta / omega.
  double phase() const { return std::atan(-delta() / omega()); }
  double amplitude() const { return 0.5 / std::cos(phase()); }

  /// Throws DomainError unless 0 <= delta < omega0 and the constants are
  /// positive and finite.
  void validate() const;
};

/// u_tt = c^2 u_xx on x in [0, pi], t in [0, 2 pi], u = 0 at both ends,
/// u(x, 0) = sin x, u_t(x, 0) = sin x.
struct WaveParams {
  double c = 1.0;

  static constexpr double x_end = std::numbers::pi;
  static constexpr double t_end = 2.0 * std::numbers::pi;

  void validate() const;
};

/// One of the two benchmark problems.
struct ProblemSpec {
  std::variant<ShmParams, WaveParams> params;

  bool is_shm() const { return std::holds_alternative<ShmParams>(params); }
  bool is_wave() const { return std::holds_alternative<WaveParams>(params); }
  const ShmParams& shm() const { return std::get<ShmParams>(params); }
  const WaveParams& wave() const { return std::get<WaveParams>(params); }

  std::string kind() const { return is_shm() ? "shm" : "wave"; }
  /// omega0 for the oscillator, c for the wave equation.
  double constant() const { return is_shm() ? shm().omega0() : wave().c; }
  int input_width() const { return is_shm() ? 1 : 2; }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Exact solutions. Generic in the scalar so jets give analytic derivatives.

template <typename T>
T shm_exact(const T& t, const ShmParams& p) {
  using std::cos;
  using std::exp;
  p.validate();
  return (2.0 * p.amplitude()) * (exp(-p.delta() * t) * cos(p.omega() * t + p.phase()));
}

/// sin(x) (cos(ct) + sin(ct)/c); reduces to sin(x)(sin t + cos t) at c = 1.
double wave_exact(double x, double t, const WaveParams& p);

// ---------------------------------------------------------------------------
// Residual formulas, shared by plain numbers, jets and tape nodes.

template <typename T>
T shm_interior_residual(const T& u, const T& du, const T& d2u, const ShmParams& p) {
  return p.mass * d2u + p.friction * du + p.stiffness * u;
}

template <typename T>
T wave_interior_residual(const T& u_tt, const T& u_xx, const WaveParams& p) {
  return u_tt - (p.c * p.c) * u_xx;
}

// ---------------------------------------------------------------------------
// Tape-recorded residuals

struct PointSet;

/// A 1 x N row of residuals and the count its mean is taken over.
struct ResidualFamily {
  ad::Var residual;
  double count = 0.0;
};

/// Residual families of the three loss terms. The initial-condition term
/// holds two families (value and time derivative); the boundary term holds
/// one family per spatial boundary.
struct ResidualTerms {
  std::vector<ResidualFamily> interior;
  std::vector<ResidualFamily> initial;
  std::vector<ResidualFamily> boundary;
};

ResidualTerms shm_residuals(const TapedNetwork& net, const PointSet& points, const ShmParams& p);
ResidualTerms wave_residuals(const TapedNetwork& net, const PointSet& points,
                             const WaveParams& p);
ResidualTerms problem_residuals(const TapedNetwork& net, const PointSet& points,
                                const ProblemSpec& problem);

/// Interior residual of the oscillator at one time, recorded on `tape`
/// (which must be bound to `net.flat`).
ad::Var shm_residual(const NetworkParams& net, ad::Tape& tape, double t, const ShmParams& p);

// ---------------------------------------------------------------------------
// Evaluation grid

/// 1000 equidistant t for the oscillator; a 100 x 100 (x, t) grid for the
/// wave equation. One column per point.
Eigen::MatrixXd evaluation_grid(const ProblemSpec& problem);
Eigen::VectorXd exact_on(const ProblemSpec& problem, const Eigen::MatrixXd& points);

}  // namespace pinn
