#include "pinn/tape.hpp"

#include "pinn/errors.hpp"

#include <string>

namespace pinn::ad {

std::string_view op_name(Op op) noexcept {
  switch (op) {
    case Op::kParam: return "param";
    case Op::kConstant: return "constant";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kAffine: return "affine";
    case Op::kSquare: return "square";
    case Op::kTanh: return "tanh";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kExp: return "exp";
    case Op::kMatMul: return "matmul";
    case Op::kAddBias: return "add_bias";
    case Op::kSum: return "sum";
  }
  return "unknown";
}

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw UsageError("Var: empty handle");
  return tape_->value(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw UsageError("Var::scalar on a non-scalar node");
  return v(0, 0);
}

void Tape::check(Var v) const {
  if (v.tape_ != this) throw UsageError("node belongs to a different tape");
  if (v.id_ >= nodes_.size()) throw UsageError("dangling node id " + std::to_string(v.id_));
}

const Matrix& Tape::value(std::uint32_t id) const {
  if (id >= nodes_.size()) throw UsageError("dangling node id " + std::to_string(id));
  return nodes_[id].value;
}

Op Tape::op(std::uint32_t id) const {
  if (id >= nodes_.size()) throw UsageError("dangling node id " + std::to_string(id));
  return nodes_[id].op;
}

void Tape::clear() { nodes_.clear(); }

Var Tape::record(Op op, Var lhs, Var rhs, Matrix value, double alpha, double beta) {
  if (!value.allFinite()) {
    throw NumericError(std::string(op_name(op)),
                       "non-finite result in " + std::string(op_name(op)));
  }
  Node node{op, false, kNone, kNone, alpha, beta, 0, std::move(value)};
  if (lhs.valid()) {
    node.lhs = lhs.id_;
    node.needs_grad = nodes_[lhs.id_].needs_grad;
  }
  if (rhs.valid()) {
    node.rhs = rhs.id_;
    node.needs_grad = node.needs_grad || nodes_[rhs.id_].needs_grad;
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::param(std::size_t offset, Eigen::Index rows, Eigen::Index cols) {
  const auto count = static_cast<std::size_t>(rows * cols);
  if (rows <= 0 || cols <= 0 || offset + count > params_.size()) {
    throw UsageError("parameter block out of range");
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Matrix value = Eigen::Map<const RowMajor>(params_.data() + offset, rows, cols);
  nodes_.push_back(Node{Op::kParam, true, kNone, kNone, 0.0, 0.0, offset, std::move(value)});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Matrix value) { return record(Op::kConstant, Var{}, Var{}, std::move(value)); }

Var Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw UsageError("shape mismatch in " + std::string(op));
  }
}

}  // namespace

Var Tape::add(Var a, Var b) {
  check(a), check(b);
  require_same_shape(a.value(), b.value(), "add");
  return record(Op::kAdd, a, b, a.value() + b.value());
}

Var Tape::sub(Var a, Var b) {
  check(a), check(b);
  require_same_shape(a.value(), b.value(), "sub");
  return record(Op::kSub, a, b, a.value() - b.value());
}

Var Tape::mul(Var a, Var b) {
  check(a), check(b);
  require_same_shape(a.value(), b.value(), "mul");
  return record(Op::kMul, a, b, a.value().cwiseProduct(b.value()));
}

Var Tape::div(Var a, Var b) {
  check(a), check(b);
  require_same_shape(a.value(), b.value(), "div");
  if ((b.value().array() == 0.0).any()) throw DomainError("division by zero");
  return record(Op::kDiv, a, b, a.value().cwiseQuotient(b.value()));
}

Var Tape::affine(Var a, double alpha, double beta) {
  check(a);
  return record(Op::kAffine, a, Var{}, (alpha * a.value().array() + beta).matrix(), alpha, beta);
}

Var Tape::square(Var a) {
  check(a);
  return record(Op::kSquare, a, Var{}, a.value().array().square().matrix());
}

Var Tape::tanh(Var a) {
  check(a);
  return record(Op::kTanh, a, Var{}, a.value().array().tanh().matrix());
}

Var Tape::sin(Var a) {
  check(a);
  return record(Op::kSin, a, Var{}, a.value().array().sin().matrix());
}

Var Tape::cos(Var a) {
  check(a);
  return record(Op::kCos, a, Var{}, a.value().array().cos().matrix());
}

Var Tape::exp(Var a) {
  check(a);
  return record(Op::kExp, a, Var{}, a.value().array().exp().matrix());
}

Var Tape::matmul(Var a, Var b) {
  check(a), check(b);
  if (a.value().cols() != b.value().rows()) throw UsageError("shape mismatch in matmul");
  Matrix value = a.value() * b.value();
  return record(Op::kMatMul, a, b, std::move(value));
}

Var Tape::add_bias(Var a, Var bias) {
  check(a), check(bias);
  if (bias.value().cols() != 1 || bias.value().rows() != a.value().rows()) {
    throw UsageError("shape mismatch in add_bias");
  }
  Matrix value = a.value().colwise() + bias.value().col(0);
  return record(Op::kAddBias, a, bias, std::move(value));
}

Var Tape::sum(Var a) {
  check(a);
  return record(Op::kSum, a, Var{}, Matrix::Constant(1, 1, a.value().sum()));
}

namespace {

template <typename Expr>
void accumulate(Matrix& slot, const Expr& expr) {
  if (slot.size() == 0) {
    slot = expr;
  } else {
    slot += expr;
  }
}

}  // namespace

Vector Tape::backward(Var output) const {
  check(output);
  const Node& out = nodes_[output.id_];
  if (out.value.rows() != 1 || out.value.cols() != 1) {
    throw UsageError("backward requires a scalar output node");
  }

  Vector grad = Vector::Zero(static_cast<Eigen::Index>(params_.size()));
  if (!out.needs_grad) return grad;

  std::vector<Matrix> adj(output.id_ + 1);
  adj[output.id_] = Matrix::Ones(1, 1);

  auto wants = [&](std::uint32_t id) { return id != kNone && nodes_[id].needs_grad; };

  for (std::int64_t i = output.id_; i >= 0; --i) {
    Matrix& g = adj[static_cast<std::size_t>(i)];
    if (g.size() == 0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    const std::uint32_t l = n.lhs;
    const std::uint32_t r = n.rhs;

    switch (n.op) {
      case Op::kParam: {
        using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        Eigen::Map<RowMajor>(grad.data() + n.offset, n.value.rows(), n.value.cols()) += g;
        break;
      }
      case Op::kConstant:
        break;
      case Op::kAdd:
        if (wants(l)) accumulate(adj[l], g);
        if (wants(r)) accumulate(adj[r], g);
        break;
      case Op::kSub:
        if (wants(l)) accumulate(adj[l], g);
        if (wants(r)) accumulate(adj[r], -g);
        break;
      case Op::kMul:
        if (wants(l)) accumulate(adj[l], g.cwiseProduct(nodes_[r].value));
        if (wants(r)) accumulate(adj[r], g.cwiseProduct(nodes_[l].value));
        break;
      case Op::kDiv: {
        const Matrix& b = nodes_[r].value;
        if (wants(l)) accumulate(adj[l], g.cwiseQuotient(b));
        if (wants(r)) {
          accumulate(adj[r], (-g.array() * n.value.array() / b.array()).matrix());
        }
        break;
      }
      case Op::kAffine:
        if (wants(l)) accumulate(adj[l], n.alpha * g);
        break;
      case Op::kSquare:
        if (wants(l)) accumulate(adj[l], (2.0 * g.array() * nodes_[l].value.array()).matrix());
        break;
      case Op::kTanh:
        if (wants(l)) {
          accumulate(adj[l], (g.array() * (1.0 - n.value.array().square())).matrix());
        }
        break;
      case Op::kSin:
        if (wants(l)) accumulate(adj[l], (g.array() * nodes_[l].value.array().cos()).matrix());
        break;
      case Op::kCos:
        if (wants(l)) accumulate(adj[l], (-g.array() * nodes_[l].value.array().sin()).matrix());
        break;
      case Op::kExp:
        if (wants(l)) accumulate(adj[l], g.cwiseProduct(n.value));
        break;
      case Op::kMatMul:
        if (wants(l)) accumulate(adj[l], g * nodes_[r].value.transpose());
        if (wants(r)) accumulate(adj[r], nodes_[l].value.transpose() * g);
        break;
      case Op::kAddBias:
        if (wants(l)) accumulate(adj[l], g);
        if (wants(r)) accumulate(adj[r], g.rowwise().sum());
        break;
      case Op::kSum:
        if (wants(l)) {
          accumulate(adj[l], Matrix::Constant(nodes_[l].value.rows(), nodes_[l].value.cols(),
                                              g(0, 0)));
        }
        break;
    }
    // Adjoint no longer needed once propagated.
    g.resize(0, 0);
  }
  return grad;
}

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw UsageError("Var: empty handle");
  return *a.tape();
}

}  // namespace

Var operator+(Var a, Var b) { return tape_of(a).add(a, b); }
Var operator-(Var a, Var b) { return tape_of(a).sub(a, b); }
Var operator*(Var a, Var b) { return tape_of(a).mul(a, b); }
Var operator/(Var a, Var b) { return tape_of(a).div(a, b); }
Var operator-(Var a) { return tape_of(a).affine(a, -1.0, 0.0); }
Var operator*(double s, Var a) { return tape_of(a).affine(a, s, 0.0); }
Var operator*(Var a, double s) { return tape_of(a).affine(a, s, 0.0); }
Var operator+(Var a, double s) { return tape_of(a).affine(a, 1.0, s); }
Var operator+(double s, Var a) { return tape_of(a).affine(a, 1.0, s); }
Var operator-(Var a, double s) { return tape_of(a).affine(a, 1.0, -s); }
Var operator-(double s, Var a) { return tape_of(a).affine(a, -1.0, s); }

Var square(Var a) { return tape_of(a).square(a); }
Var tanh(Var a) { return tape_of(a).tanh(a); }
Var sin(Var a) { return tape_of(a).sin(a); }
Var cos(Var a) { return tape_of(a).cos(a); }
Var exp(Var a) { return tape_of(a).exp(a); }
Var sum(Var a) { return tape_of(a).sum(a); }
Var mean(Var a) {
  const auto n = static_cast<double>(a.value().size());
  if (n == 0) throw UsageError("mean of an empty node");
  return tape_of(a).affine(tape_of(a).sum(a), 1.0 / n, 0.0);
}
Var matmul(Var a, Var b) { return tape_of(a).matmul(a, b); }
Var add_bias(Var a, Var bias) { return tape_of(a).add_bias(a, bias); }

}  // namespace pinn::ad
