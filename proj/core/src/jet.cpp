#include "pinn/jet.hpp"

#include "pinn/errors.hpp"

#include <string>

namespace pinn::ad {

std::string_view jet_op_name(JetOp op) noexcept {
  switch (op) {
    case JetOp::kAdd: return "add";
    case JetOp::kSub: return "sub";
    case JetOp::kMul: return "mul";
    case JetOp::kDiv: return "div";
    case JetOp::kNeg: return "neg";
    case JetOp::kTanh: return "tanh";
    case JetOp::kSin: return "sin";
    case JetOp::kCos: return "cos";
    case JetOp::kExp: return "exp";
    case JetOp::kSquare: return "square";
    case JetOp::kScale: return "scale";
  }
  return "unknown";
}

namespace {

std::size_t arity(JetOp op) {
  switch (op) {
    case JetOp::kAdd:
    case JetOp::kSub:
    case JetOp::kMul:
    case JetOp::kDiv:
      return 2;
    default:
      return 1;
  }
}

template <typename Args>
void check_arity(JetOp op, const Args& args) {
  if (args.size() != arity(op)) {
    throw UsageError("jet " + std::string(jet_op_name(op)) + " expects " +
                     std::to_string(arity(op)) + " argument(s)");
  }
}

}  // namespace

Jet2 operator/(const Jet2& a, const Jet2& b) {
  if (b.val == 0.0) throw DomainError("jet division by zero");
  const double q = a.val / b.val;
  const double q1 = (a.d1 - q * b.d1) / b.val;
  const double q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) / b.val;
  return {q, q1, q2};
}

Jet2 jet_apply(JetOp op, std::span<const Jet2> args, double factor) {
  check_arity(op, args);
  Jet2 out;
  switch (op) {
    case JetOp::kAdd: out = args[0] + args[1]; break;
    case JetOp::kSub: out = args[0] - args[1]; break;
    case JetOp::kMul: out = args[0] * args[1]; break;
    case JetOp::kDiv: out = args[0] / args[1]; break;
    case JetOp::kNeg: out = -args[0]; break;
    case JetOp::kTanh: out = tanh(args[0]); break;
    case JetOp::kSin: out = sin(args[0]); break;
    case JetOp::kCos: out = cos(args[0]); break;
    case JetOp::kExp: out = exp(args[0]); break;
    case JetOp::kSquare: out = square(args[0]); break;
    case JetOp::kScale: out = factor * args[0]; break;
  }
  if (!std::isfinite(out.val) || !std::isfinite(out.d1) || !std::isfinite(out.d2)) {
    throw NumericError(std::string(jet_op_name(op)),
                       "non-finite jet result in " + std::string(jet_op_name(op)));
  }
  return out;
}

JetVar make_jet(Tape& tape, const Matrix& value, const Matrix& direction) {
  if (value.rows() != direction.rows() || value.cols() != direction.cols()) {
    throw UsageError("make_jet: value and direction shapes differ");
  }
  return {tape.constant(value), tape.constant(direction),
          tape.constant(Matrix::Zero(value.rows(), value.cols()))};
}

JetVar make_jet(Tape& tape, const Jet2& jet) {
  return {tape.constant(jet.val), tape.constant(jet.d1), tape.constant(jet.d2)};
}

namespace {

// Unary rule on tape: (f, fp * a1, fp * a2 + fpp * a1^2).
JetVar chain(const JetVar& a, Var f, Var fp, Var fpp) {
  return {f, fp * a.d1, fp * a.d2 + fpp * square(a.d1)};
}

JetVar record(JetOp op, std::span<const JetVar> args, double factor) {
  const JetVar& a = args[0];
  switch (op) {
    case JetOp::kAdd: {
      const JetVar& b = args[1];
      return {a.val + b.val, a.d1 + b.d1, a.d2 + b.d2};
    }
    case JetOp::kSub: {
      const JetVar& b = args[1];
      return {a.val - b.val, a.d1 - b.d1, a.d2 - b.d2};
    }
    case JetOp::kMul: {
      const JetVar& b = args[1];
      return {a.val * b.val, a.d1 * b.val + a.val * b.d1,
              a.d2 * b.val + 2.0 * (a.d1 * b.d1) + a.val * b.d2};
    }
    case JetOp::kDiv: {
      const JetVar& b = args[1];
      Var q = a.val / b.val;
      Var q1 = (a.d1 - q * b.d1) / b.val;
      Var q2 = (a.d2 - 2.0 * (q1 * b.d1) - q * b.d2) / b.val;
      return {q, q1, q2};
    }
    case JetOp::kNeg:
      return {-a.val, -a.d1, -a.d2};
    case JetOp::kScale:
      return {factor * a.val, factor * a.d1, factor * a.d2};
    case JetOp::kTanh: {
      Var y = tanh(a.val);
      Var s = 1.0 - square(y);
      return chain(a, y, s, -2.0 * (y * s));
    }
    case JetOp::kSin: {
      Var s = sin(a.val);
      Var c = cos(a.val);
      return chain(a, s, c, -s);
    }
    case JetOp::kCos: {
      Var s = sin(a.val);
      Var c = cos(a.val);
      return chain(a, c, -s, -c);
    }
    case JetOp::kExp: {
      Var e = exp(a.val);
      return chain(a, e, e, e);
    }
    case JetOp::kSquare:
      return {square(a.val), 2.0 * (a.val * a.d1),
              2.0 * (a.val * a.d2) + 2.0 * square(a.d1)};
  }
  throw UsageError("unknown jet op");
}

}  // namespace

JetVar jet_elementary(JetOp op, std::span<const JetVar> args, double factor) {
  check_arity(op, args);
  try {
    return record(op, args, factor);
  } catch (const NumericError& e) {
    throw NumericError(std::string(jet_op_name(op)),
                       "non-finite jet result in " + std::string(jet_op_name(op)) + " (" +
                           e.what() + ")");
  }
}

namespace {

JetVar apply1(JetOp op, const JetVar& a, double factor = 1.0) {
  const JetVar args[] = {a};
  return jet_elementary(op, args, factor);
}

JetVar apply2(JetOp op, const JetVar& a, const JetVar& b) {
  const JetVar args[] = {a, b};
  return jet_elementary(op, args);
}

}  // namespace

JetVar operator+(const JetVar& a, const JetVar& b) { return apply2(JetOp::kAdd, a, b); }
JetVar operator-(const JetVar& a, const JetVar& b) { return apply2(JetOp::kSub, a, b); }
JetVar operator*(const JetVar& a, const JetVar& b) { return apply2(JetOp::kMul, a, b); }
JetVar operator/(const JetVar& a, const JetVar& b) { return apply2(JetOp::kDiv, a, b); }
JetVar operator-(const JetVar& a) { return apply1(JetOp::kNeg, a); }
JetVar operator*(double s, const JetVar& a) { return apply1(JetOp::kScale, a, s); }
JetVar tanh(const JetVar& a) { return apply1(JetOp::kTanh, a); }
JetVar sin(const JetVar& a) { return apply1(JetOp::kSin, a); }
JetVar cos(const JetVar& a) { return apply1(JetOp::kCos, a); }
JetVar exp(const JetVar& a) { return apply1(JetOp::kExp, a); }
JetVar square(const JetVar& a) { return apply1(JetOp::kSquare, a); }

}  // namespace pinn::ad
