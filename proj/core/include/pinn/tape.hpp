#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pinn::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Elementary operations recorded on a tape. Every node holds a dense matrix;
/// scalars are 1x1 nodes and batches of collocation points are laid out one
/// point per column.
enum class Op : std::uint8_t {
  kParam,     // leaf bound to a block of the flat parameter vector
  kConstant,  // leaf that never receives an adjoint
  kAdd,
  kSub,
  kMul,  // entrywise
  kDiv,  // entrywise
  kAffine,  // alpha * a + beta, covers neg / scale / shift
  kSquare,
  kTanh,
  kSin,
  kCos,
  kExp,
  kMatMul,
  kAddBias,  // (r x c) + (r x 1) broadcast over columns
  kSum,      // reduce to 1x1
};

std::string_view op_name(Op op) noexcept;

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape is
/// alive and has not been cleared.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  double scalar() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

  Tape* tape() const noexcept { return tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Append-only record of elementary operations over a flat parameter vector.
///
/// Parameter leaves view row-major blocks of the vector passed at
/// construction. The vector must outlive the tape and must not change while
/// the tape is in use. `backward` leaves the tape untouched, so several
/// outputs of one recording can be differentiated in turn; `clear` drops
/// every node.
class Tape {
 public:
  Tape() = default;
  explicit Tape(std::span<const double> params) : params_(params) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var param(std::size_t offset, Eigen::Index rows, Eigen::Index cols);
  Var constant(Matrix value);
  Var constant(double value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var affine(Var a, double alpha, double beta);
  Var square(Var a);
  Var tanh(Var a);
  Var sin(Var a);
  Var cos(Var a);
  Var exp(Var a);
  Var matmul(Var a, Var b);
  Var add_bias(Var a, Var bias);
  Var sum(Var a);

  /// Reverse sweep from a 1x1 node. Returns d(output)/d(params) in the
  /// ordering of the flat parameter vector.
  Vector backward(Var output) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t parameter_count() const noexcept { return params_.size(); }
  const Matrix& value(std::uint32_t id) const;
  Op op(std::uint32_t id) const;
  void clear();

 private:
  struct Node {
    Op op;
    bool needs_grad;
    std::uint32_t lhs;
    std::uint32_t rhs;
    double alpha;
    double beta;
    std::size_t offset;  // parameter leaves only
    Matrix value;
  };

  static constexpr std::uint32_t kNone = 0xffffffffu;

  void check(Var v) const;
  Var record(Op op, Var lhs, Var rhs, Matrix value, double alpha = 0.0,
             double beta = 0.0);

  std::span<const double> params_;
  std::vector<Node> nodes_;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator*(double s, Var a);
Var operator*(Var a, double s);
Var operator+(Var a, double s);
Var operator+(double s, Var a);
Var operator-(Var a, double s);
Var operator-(double s, Var a);

Var square(Var a);
Var tanh(Var a);
Var sin(Var a);
Var cos(Var a);
Var exp(Var a);
Var sum(Var a);
Var mean(Var a);
Var matmul(Var a, Var b);
Var add_bias(Var a, Var bias);

}  // namespace pinn::ad
