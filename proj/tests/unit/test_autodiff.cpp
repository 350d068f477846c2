#include "oracles.hpp"

#include "pinn/errors.hpp"
#include "pinn/jet.hpp"
#include "pinn/loss.hpp"
#include "pinn/network.hpp"
#include "pinn/tape.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>

using namespace pinn;
using namespace pinn::ad;

TEST_SUITE("autodiff") {

TEST_CASE("jet seeds") {
  CHECK(Jet2::variable(2.5) == Jet2{2.5, 1.0, 0.0});
  CHECK(Jet2::constant(-1.0) == Jet2{-1.0, 0.0, 0.0});
}

TEST_CASE("tanh jet at the origin") {
  const std::array<Jet2, 1> x{Jet2{0.0, 1.0, 0.0}};
  CHECK(jet_apply(JetOp::kTanh, x) == Jet2{0.0, 1.0, 0.0});
}

TEST_CASE("product jet with a constant factor") {
  const std::array<Jet2, 2> args{Jet2{2.0, 1.0, 0.0}, Jet2{3.0, 0.0, 0.0}};
  CHECK(jet_apply(JetOp::kMul, args) == Jet2{6.0, 3.0, 0.0});
}

TEST_CASE("tanh jet at one") {
  const std::array<Jet2, 1> x{Jet2{1.0, 1.0, 0.0}};
  const Jet2 y = jet_apply(JetOp::kTanh, x);
  CHECK(y.val == doctest::Approx(0.76159415595576488812).epsilon(1e-15));
  CHECK(y.d1 == doctest::Approx(0.41997434161402606939).epsilon(1e-15));
  CHECK(y.d2 == doctest::Approx(-0.63970000844922450019).epsilon(1e-15));
}

TEST_CASE("composite jet matches high precision derivatives") {
  // exp(sin x) * x / (1 + x^2) at x = 0.7
  const Jet2 x = Jet2::variable(0.7);
  const Jet2 y = exp(sin(x)) * x / (1.0 + x * x);
  CHECK(y.val == doctest::Approx(0.89472991548369877908).epsilon(1e-14));
  CHECK(y.d1 == doctest::Approx(1.121826952506580037).epsilon(1e-14));
  CHECK(y.d2 == doctest::Approx(-1.4068889434081178571).epsilon(1e-13));
}

TEST_CASE("jet algebra agrees with finite differences") {
  auto f = [](const Jet2& x) { return tanh(square(x) * 0.5) * cos(x) - exp(-1.0 * x) / (x * x + 2.0); };
  auto value = [&](double v) { return f(Jet2::constant(v)).val; };
  for (double x = -2.0; x <= 2.0; x += 0.25) {
    const Jet2 y = f(Jet2::variable(x));
    CHECK(oracle::relative_error(y.d1, oracle::central_first(value, x, 1e-3), 1e-3) < 1e-4);
    CHECK(oracle::relative_error(y.d2, oracle::central_second(value, x, 1e-3), 1e-3) < 1e-4);
  }
}

TEST_CASE("jet errors") {
  const std::array<Jet2, 2> div0{Jet2{1.0, 1.0, 0.0}, Jet2{0.0, 1.0, 0.0}};
  CHECK_THROWS_AS(jet_apply(JetOp::kDiv, div0), DomainError);
  const std::array<Jet2, 1> one{Jet2{1.0, 1.0, 0.0}};
  CHECK_THROWS_AS(jet_apply(JetOp::kAdd, one), UsageError);
  const std::array<Jet2, 1> big{Jet2{1000.0, 1.0, 0.0}};
  try {
    jet_apply(JetOp::kExp, big);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(e.op() == "exp");
  }
}

TEST_CASE("gradient of a square") {
  const std::array<double, 1> theta{3.0};
  Tape tape(theta);
  const Var t = tape.param(0, 1, 1);
  const Vector g = tape.backward(square(t));
  REQUIRE(g.size() == 1);
  CHECK(g[0] == 6.0);
}

TEST_CASE("gradient of a product") {
  const std::array<double, 2> theta{2.0, 5.0};
  Tape tape(theta);
  const Var a = tape.param(0, 1, 1);
  const Var b = tape.param(1, 1, 1);
  const Vector g = tape.backward(a * b);
  CHECK(g[0] == 5.0);
  CHECK(g[1] == 2.0);
}

TEST_CASE("every tape op matches finite differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  Vector theta(12);
  for (auto& v : theta) v = u(rng);
  auto build = [](Tape& tape) {
    const Var w = tape.param(0, 2, 3);
    const Var x = tape.param(6, 3, 2);
    const Var b = tape.param(10, 2, 1);
    Var h = add_bias(matmul(w, x), b);
    h = tanh(h) + sin(h) * cos(h) - exp(-0.5 * h) / (square(h) + 1.0);
    h = 2.0 - h * 0.3 + (h - 1.0);
    return mean(h) + sum(h * h);
  };
  auto loss = [&](const Vector& p) {
    Tape tape(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
    return build(tape).scalar();
  };
  Tape tape(std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
  const Vector g = tape.backward(build(tape));
  CHECK(oracle::max_relative_error(g, oracle::central_gradient(loss, theta, 1e-5)) < 1e-7);
}

TEST_CASE("network loss gradients match finite differences") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    const bool shm = trial % 2 == 0;
    const ProblemSpec problem = shm ? ProblemSpec{ShmParams::from_omega0(3.0)} : ProblemSpec{WaveParams{1.5}};
    const NetworkParams net = oracle::random_network(oracle::random_dims(rng, shm ? 1 : 2), 100 + trial, 0.8);
    SamplingPlan plan = shm ? SamplingPlan{SamplingScheme::kEquidistant, 9, 0, 1, 1}
                            : SamplingPlan{SamplingScheme::kSobol, 12, 5, 6, 1};
    const PointSet pts = build_point_set(plan, problem);
    const LossWeights w = shm ? LossWeights{0.5, 1.0, 0.0, 0.0} : LossWeights{1.0, 0.7, 1.3, 5.0};
    const double lambda = initial_weight(w, 3, 10);
    auto loss = [&](const Vector& p) {
      NetworkParams q = net;
      q.flat = p;
      return evaluate_loss_parts(q, pts, problem, w).evaluation(w, lambda).loss;
    };
    const Vector g = evaluate_loss_parts(net, pts, problem, w).evaluation(w, lambda).grad;
    CHECK(oracle::max_relative_error(g, oracle::central_gradient(loss, net.flat, 1e-4)) < 1e-5);
  }
}

TEST_CASE("backward is linear") {
  const NetworkParams net = oracle::random_network({2, 5, 4, 1}, 3);
  const PointSet pts = build_point_set({SamplingScheme::kSobol, 16, 4, 8, 1}, ProblemSpec{WaveParams{2.0}});
  Tape tape(std::span<const double>(net.flat.data(), static_cast<std::size_t>(net.flat.size())));
  const TapedNetwork taped(net, tape);
  const ResidualTerms terms = wave_residuals(taped, pts, WaveParams{2.0});
  const Var f = mean(square(terms.interior[0].residual));
  const Var g = mean(square(terms.initial[1].residual));
  const Vector lhs = tape.backward(1.7 * f + (-0.3) * g);
  const Vector rhs = 1.7 * tape.backward(f) - 0.3 * tape.backward(g);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
}

TEST_CASE("gradients are bitwise deterministic") {
  const NetworkParams net = oracle::random_network({1, 8, 8, 1}, 5);
  const ProblemSpec problem{ShmParams::from_omega0(20.0)};
  const PointSet pts = build_point_set(SamplingPlan::shm_default(), problem);
  const LossParts a = evaluate_loss_parts(net, pts, problem, LossWeights::shm_default());
  const LossParts b = evaluate_loss_parts(net, pts, problem, LossWeights::shm_default());
  CHECK(a.loss_f == b.loss_f);
  CHECK(a.grad_fb == b.grad_fb);
  CHECK(a.grad_i == b.grad_i);
}

TEST_CASE("backward leaves the tape reusable") {
  const std::array<double, 1> theta{2.0};
  Tape tape(theta);
  const Var t = tape.param(0, 1, 1);
  const Var y = t * t * t;
  const Vector first = tape.backward(y);
  CHECK(tape.backward(y) == first);
  CHECK(first[0] == 12.0);
  tape.clear();
  CHECK(tape.size() == 0);
}

TEST_CASE("tape usage errors") {
  const std::array<double, 2> theta{1.0, 2.0};
  Tape tape(theta);
  Tape other(theta);
  const Var a = tape.param(0, 1, 2);
  CHECK_THROWS_AS(tape.param(1, 1, 2), UsageError);
  CHECK_THROWS_AS(tape.backward(a), UsageError);
  CHECK_THROWS_AS(tape.backward(Var{}), UsageError);
  const Var b = other.param(0, 1, 1);
  CHECK_THROWS_AS(tape.backward(b), UsageError);
  CHECK_THROWS_AS(tape.matmul(a, a), UsageError);
  const Var zero = tape.constant(0.0);
  CHECK_THROWS_AS(tape.div(tape.constant(1.0), zero), DomainError);
  CHECK_THROWS_AS(tape.constant(std::numeric_limits<double>::infinity()), NumericError);
}

TEST_CASE("taped jets agree with value jets") {
  const std::array<double, 1> theta{0.0};
  Tape tape(theta);
  const JetVar x = make_jet(tape, Jet2::variable(0.3));
  const JetVar y = tanh(square(x)) * sin(x) - exp(x) / (x * x + make_jet(tape, Jet2::constant(1.0)));
  const Jet2 xv = Jet2::variable(0.3);
  const Jet2 yv = tanh(square(xv)) * sin(xv) - exp(xv) / (xv * xv + 1.0);
  CHECK(y.val.scalar() == doctest::Approx(yv.val).epsilon(1e-14));
  CHECK(y.d1.scalar() == doctest::Approx(yv.d1).epsilon(1e-14));
  CHECK(y.d2.scalar() == doctest::Approx(yv.d2).epsilon(1e-14));
}

TEST_CASE("second derivative of a linear layer") {
  NetworkParams net{{1, 1}, Vector(2)};
  net.flat << 2.5, -1.0;
  Tape tape(std::span<const double>(net.flat.data(), 2));
  const double point[] = {0.4};
  const JetVar u = nested_second_derivative(net, tape, point, 0);
  CHECK(u.val.scalar() == doctest::Approx(0.0));
  CHECK(u.d1.scalar() == 2.5);
  CHECK(u.d2.scalar() == 0.0);
  const Vector g = tape.backward(sum(u.d2));
  CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("odd network has zero curvature at the origin") {
  NetworkParams net{{1, 1, 1}, Vector(4)};
  net.flat << 1.0, 0.0, 1.0, 0.0;
  Tape tape(std::span<const double>(net.flat.data(), 4));
  const double point[] = {0.0};
  CHECK(nested_second_derivative(net, tape, point, 0).d2.scalar() == 0.0);
}

TEST_CASE("input second derivatives match finite differences") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const NetworkParams net = oracle::random_network(oracle::random_dims(rng, 2), 40 + trial);
    const std::vector<double> p{0.3 + 0.1 * trial, -0.4 + 0.2 * trial};
    for (int axis = 0; axis < 2; ++axis) {
      Tape tape(std::span<const double>(net.flat.data(), static_cast<std::size_t>(net.flat.size())));
      const JetVar u = nested_second_derivative(net, tape, p, axis);
      auto along = [&](double v) {
        std::vector<double> q = p;
        q[axis] = v;
        return oracle::naive_forward(net, q);
      };
      CHECK(u.val.scalar() == doctest::Approx(oracle::naive_forward(net, p)).epsilon(1e-13));
      CHECK(oracle::relative_error(u.d2.scalar(), oracle::central_second(along, p[axis], 1e-3), 1e-3) <
            1e-4);
    }
  }
}

TEST_CASE("axis out of range") {
  const NetworkParams net = oracle::random_network({2, 3, 1}, 1);
  Tape tape(std::span<const double>(net.flat.data(), static_cast<std::size_t>(net.flat.size())));
  const double point[] = {0.1, 0.2};
  CHECK_THROWS_AS(nested_second_derivative(net, tape, point, 2), UsageError);
  CHECK_THROWS_AS(nested_second_derivative(net, tape, point, -1), UsageError);
}

}
