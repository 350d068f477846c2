#pragma once

#include "pinn/tape.hpp"

#include <cmath>
#include <span>
#include <string_view>

namespace pinn::ad {

/// Truncated second-order Taylor coefficients of a scalar along one input
/// direction: value, first and second directional derivative.
struct Jet2 {
  double val = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  static constexpr Jet2 variable(double x) { return {x, 1.0, 0.0}; }
  static constexpr Jet2 constant(double c) { return {c, 0.0, 0.0}; }

  friend bool operator==(const Jet2&, const Jet2&) = default;
};

enum class JetOp { kAdd, kSub, kMul, kDiv, kNeg, kTanh, kSin, kCos, kExp, kSquare, kScale };

std::string_view jet_op_name(JetOp op) noexcept;

/// Applies `op` to plain jets. `factor` is only read by kScale.
/// Throws DomainError on a zero denominator and NumericError on a non-finite
/// result.
Jet2 jet_apply(JetOp op, std::span<const Jet2> args, double factor = 1.0);

inline Jet2 operator+(const Jet2& a, const Jet2& b) { return {a.val + b.val, a.d1 + b.d1, a.d2 + b.d2}; }
inline Jet2 operator-(const Jet2& a, const Jet2& b) { return {a.val - b.val, a.d1 - b.d1, a.d2 - b.d2}; }
inline Jet2 operator-(const Jet2& a) { return {-a.val, -a.d1, -a.d2}; }
inline Jet2 operator*(double s, const Jet2& a) { return {s * a.val, s * a.d1, s * a.d2}; }
inline Jet2 operator*(const Jet2& a, double s) { return s * a; }
inline Jet2 operator+(const Jet2& a, double s) { return {a.val + s, a.d1, a.d2}; }
inline Jet2 operator+(double s, const Jet2& a) { return a + s; }
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.val * b.val, a.d1 * b.val + a.val * b.d1,
          a.d2 * b.val + 2.0 * a.d1 * b.d1 + a.val * b.d2};
}
Jet2 operator/(const Jet2& a, const Jet2& b);

// Unary f: (f(v), f'(v) a1, f'(v) a2 + f''(v) a1^2)
inline Jet2 chain(const Jet2& a, double f, double fp, double fpp) {
  return {f, fp * a.d1, fp * a.d2 + fpp * a.d1 * a.d1};
}
inline Jet2 tanh(const Jet2& a) {
  const double y = std::tanh(a.val);
  const double s = 1.0 - y * y;
  return chain(a, y, s, -2.0 * y * s);
}
inline Jet2 sin(const Jet2& a) {
  const double s = std::sin(a.val), c = std::cos(a.val);
  return chain(a, s, c, -s);
}
inline Jet2 cos(const Jet2& a) {
  const double s = std::sin(a.val), c = std::cos(a.val);
  return chain(a, c, -s, -c);
}
inline Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.val);
  return chain(a, e, e, e);
}
inline Jet2 square(const Jet2& a) { return a * a; }

/// Jet whose three channels are tape nodes, so that reverse mode over the
/// recorded Taylor arithmetic yields parameter gradients of any channel.
/// Channels share one shape (one column per point in a batch).
struct JetVar {
  Var val;
  Var d1;
  Var d2;
};

/// Seeds a jet on the tape: `direction` is the first-order seed, the second
/// order seed is zero.
JetVar make_jet(Tape& tape, const Matrix& value, const Matrix& direction);
JetVar make_jet(Tape& tape, const Jet2& jet);

/// Records the Taylor propagation of `op` on the tape of its arguments.
JetVar jet_elementary(JetOp op, std::span<const JetVar> args, double factor = 1.0);

JetVar operator+(const JetVar& a, const JetVar& b);
JetVar operator-(const JetVar& a, const JetVar& b);
JetVar operator*(const JetVar& a, const JetVar& b);
JetVar operator/(const JetVar& a, const JetVar& b);
JetVar operator-(const JetVar& a);
JetVar operator*(double s, const JetVar& a);
JetVar tanh(const JetVar& a);
JetVar sin(const JetVar& a);
JetVar cos(const JetVar& a);
JetVar exp(const JetVar& a);
JetVar square(const JetVar& a);

}  // namespace pinn::ad
