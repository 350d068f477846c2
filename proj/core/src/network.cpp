#include "pinn/network.hpp"

#include "pinn/errors.hpp"

#include <cmath>
#include <random>
#include <string>

namespace pinn {

using ad::Var;
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void validate_dims(std::span<const int> dims) {
  if (dims.size() < 2) throw UsageError("network needs at least input and output widths");
  for (int d : dims) {
    if (d <= 0) throw UsageError("network widths must be positive");
  }
}

std::size_t parameter_count(std::span<const int> dims) {
  validate_dims(dims);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    n += static_cast<std::size_t>(dims[l]) * dims[l + 1] + dims[l + 1];
  }
  return n;
}

std::vector<LayerSlice> layer_slices(std::span<const int> dims) {
  validate_dims(dims);
  std::vector<LayerSlice> out;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    LayerSlice s{offset, offset + static_cast<std::size_t>(dims[l]) * dims[l + 1], dims[l + 1],
                 dims[l]};
    offset = s.bias_offset + dims[l + 1];
    out.push_back(s);
  }
  return out;
}

void validate(const NetworkParams& net) {
  const std::size_t expected = parameter_count(net.layer_dims);
  if (static_cast<std::size_t>(net.flat.size()) != expected) {
    throw UsageError("flat parameter length " + std::to_string(net.flat.size()) +
                     " does not match layer dims (expected " + std::to_string(expected) + ")");
  }
  if (!net.flat.allFinite()) throw UsageError("network parameters contain non-finite values");
}

NetworkParams init_network(std::vector<int> dims, std::uint64_t seed) {
  NetworkParams net{std::move(dims), {}};
  net.flat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count(net.layer_dims)));
  std::mt19937_64 rng(seed);
  for (const LayerSlice& s : layer_slices(net.layer_dims)) {
    const double bound = std::sqrt(6.0 / (s.rows + s.cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int i = 0; i < s.rows * s.cols; ++i) {
      net.flat[static_cast<Eigen::Index>(s.weight_offset) + i] = dist(rng);
    }
  }
  return net;
}

namespace {

Eigen::Map<const RowMajor> weight_map(const NetworkParams& net, const LayerSlice& s) {
  return {net.flat.data() + s.weight_offset, s.rows, s.cols};
}

Eigen::Map<const Eigen::VectorXd> bias_map(const NetworkParams& net, const LayerSlice& s) {
  return {net.flat.data() + s.bias_offset, s.rows};
}

void check_input(const NetworkParams& net, Eigen::Index rows) {
  if (rows != net.input_width()) {
    throw UsageError("input width " + std::to_string(rows) + " does not match network input " +
                     std::to_string(net.input_width()));
  }
}

}  // namespace

Eigen::MatrixXd evaluate(const NetworkParams& net, const Eigen::MatrixXd& points) {
  validate(net);
  check_input(net, points.rows());
  const auto slices = layer_slices(net.layer_dims);
  Eigen::MatrixXd a = points;
  for (std::size_t l = 0; l < slices.size(); ++l) {
    Eigen::MatrixXd z = weight_map(net, slices[l]) * a;
    z.colwise() += bias_map(net, slices[l]);
    if (l + 1 < slices.size()) z = z.array().tanh().matrix();
    a = std::move(z);
  }
  return a;
}

std::vector<Eigen::MatrixXd> hidden_activations(const NetworkParams& net,
                                                const Eigen::MatrixXd& points) {
  validate(net);
  check_input(net, points.rows());
  const auto slices = layer_slices(net.layer_dims);
  std::vector<Eigen::MatrixXd> out;
  Eigen::MatrixXd a = points;
  for (std::size_t l = 0; l + 1 < slices.size(); ++l) {
    Eigen::MatrixXd z = weight_map(net, slices[l]) * a;
    z.colwise() += bias_map(net, slices[l]);
    a = z.array().tanh().matrix();
    out.push_back(a);
  }
  return out;
}

TapedNetwork::TapedNetwork(const NetworkParams& net, ad::Tape& tape) : net_(&net), tape_(&tape) {
  validate(net);
  if (tape.parameter_count() != static_cast<std::size_t>(net.flat.size())) {
    throw UsageError("tape is not bound to this network's parameter vector");
  }
  for (const LayerSlice& s : layer_slices(net.layer_dims)) {
    weights_.push_back(tape.param(s.weight_offset, s.rows, s.cols));
    biases_.push_back(tape.param(s.bias_offset, s.rows, 1));
  }
}

namespace {

// Directional channels of a batched jet. An invalid d2 stands for an exact zero.
struct Channel {
  Var d1;
  Var d2;
};

struct Propagated {
  Var value;
  std::vector<Channel> channels;
};

Propagated propagate(const std::vector<Var>& weights, const std::vector<Var>& biases, Var value,
                     std::vector<Channel> channels) {
  const std::size_t layers = weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Var z = add_bias(matmul(weights[l], value), biases[l]);
    for (Channel& c : channels) {
      c.d1 = matmul(weights[l], c.d1);
      if (c.d2.valid()) c.d2 = matmul(weights[l], c.d2);
    }
    if (l + 1 == layers) {
      value = z;
      break;
    }
    // tanh' = 1 - y^2, tanh'' = -2 y (1 - y^2)
    Var y = tanh(z);
    Var slope = 1.0 - square(y);
    Var curv = -2.0 * (y * slope);
    for (Channel& c : channels) {
      Var second = curv * square(c.d1);
      if (c.d2.valid()) second = slope * c.d2 + second;
      c.d1 = slope * c.d1;
      c.d2 = second;
    }
    value = y;
  }
  return {value, std::move(channels)};
}

Var zeros_like(ad::Tape& tape, Var v) {
  return tape.constant(ad::Matrix::Zero(v.rows(), v.cols()));
}

}  // namespace

ad::JetVar TapedNetwork::forward_jet(const ad::JetVar& inputs) const {
  check_input(*net_, inputs.val.rows());
  if (inputs.d1.rows() != inputs.val.rows() || inputs.d2.rows() != inputs.val.rows() ||
      inputs.d1.cols() != inputs.val.cols() || inputs.d2.cols() != inputs.val.cols()) {
    throw UsageError("forward_jet: jet channel shapes differ");
  }
  Propagated p = propagate(weights_, biases_, inputs.val, {Channel{inputs.d1, inputs.d2}});
  return {p.value, p.channels[0].d1, p.channels[0].d2};
}

AxisJets TapedNetwork::forward_axes(const Eigen::MatrixXd& points,
                                    std::span<const int> axes) const {
  check_input(*net_, points.rows());
  std::vector<Channel> channels;
  for (int axis : axes) {
    if (axis < 0 || axis >= net_->input_width()) {
      throw UsageError("derivative axis " + std::to_string(axis) + " out of range");
    }
    ad::Matrix seed = ad::Matrix::Zero(points.rows(), points.cols());
    seed.row(axis).setOnes();
    channels.push_back({tape_->constant(std::move(seed)), Var{}});
  }
  Propagated p = propagate(weights_, biases_, tape_->constant(points), std::move(channels));
  AxisJets out{p.value, {}, {}};
  for (Channel& c : p.channels) {
    out.d1.push_back(c.d1);
    out.d2.push_back(c.d2.valid() ? c.d2 : zeros_like(*tape_, c.d1));
  }
  return out;
}

Var TapedNetwork::forward(const Eigen::MatrixXd& points) const {
  check_input(*net_, points.rows());
  return propagate(weights_, biases_, tape_->constant(points), {}).value;
}

ad::JetVar nested_second_derivative(const NetworkParams& net, ad::Tape& tape,
                                    std::span<const double> point, int axis) {
  if (static_cast<int>(point.size()) != net.input_width()) {
    throw UsageError("point dimension does not match network input width");
  }
  if (axis < 0 || axis >= net.input_width()) {
    throw UsageError("derivative axis " + std::to_string(axis) + " out of range");
  }
  TapedNetwork taped(net, tape);
  const Eigen::MatrixXd p =
      Eigen::Map<const Eigen::VectorXd>(point.data(), static_cast<Eigen::Index>(point.size()));
  const int axes[] = {axis};
  AxisJets jets = taped.forward_axes(p, axes);
  return {jets.value, jets.d1[0], jets.d2[0]};
}

}  // namespace pinn
