#pragma once

#include "pinn/jet.hpp"
#include "pinn/tape.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace pinn {

/// Fully connected tanh network: layer widths plus a flat parameter vector
/// holding, per layer, W (out x in, row-major) followed by b (out).
struct NetworkParams {
  std::vector<int> layer_dims;
  Eigen::VectorXd flat;

  int input_width() const { return layer_dims.front(); }
  int output_width() const { return layer_dims.back(); }
  std::size_t layer_count() const { return layer_dims.size() - 1; }

  friend bool operator==(const NetworkParams& a, const NetworkParams& b) {
    return a.layer_dims == b.layer_dims && a.flat.size() == b.flat.size() &&
           a.flat == b.flat;
  }
};

struct LayerSlice {
  std::size_t weight_offset;
  std::size_t bias_offset;
  int rows;  // fan-out
  int cols;  // fan-in
};

/// Throws UsageError unless there are >= 2 positive widths.
void validate_dims(std::span<const int> dims);
std::size_t parameter_count(std::span<const int> dims);
std::vector<LayerSlice> layer_slices(std::span<const int> dims);

/// Throws UsageError on bad dims, wrong flat length or non-finite entries.
void validate(const NetworkParams& net);

/// Glorot-uniform weights, zero biases. Deterministic in `seed`.
NetworkParams init_network(std::vector<int> dims, std::uint64_t seed);

/// Plain forward pass, no tape. `points` has one column per sample.
Eigen::MatrixXd evaluate(const NetworkParams& net, const Eigen::MatrixXd& points);

/// Hidden activations per tanh layer, for inspection in tests and tools.
std::vector<Eigen::MatrixXd> hidden_activations(const NetworkParams& net,
                                                const Eigen::MatrixXd& points);

/// Network output and, per requested input axis, its first and second
/// derivative along that axis. Every channel is a 1 x N tape node.
struct AxisJets {
  ad::Var value;
  std::vector<ad::Var> d1;
  std::vector<ad::Var> d2;
};

/// Network parameters bound as leaves on a tape. Create once per tape; the
/// leaves are shared by every forward pass recorded on that tape.
class TapedNetwork {
 public:
  TapedNetwork(const NetworkParams& net, ad::Tape& tape);

  /// Forward pass carrying one jet per input coordinate (rows of the jet
  /// channels). Tanh on every layer but the last.
  ad::JetVar forward_jet(const ad::JetVar& inputs) const;

  /// Shares the value channel across several directions; each axis is seeded
  /// with the unit vector of that input coordinate.
  AxisJets forward_axes(const Eigen::MatrixXd& points, std::span<const int> axes) const;

  /// Value channel only.
  ad::Var forward(const Eigen::MatrixXd& points) const;

  const NetworkParams& params() const { return *net_; }
  ad::Tape& tape() const { return *tape_; }

 private:
  const NetworkParams* net_;
  ad::Tape* tape_;
  std::vector<ad::Var> weights_;
  std::vector<ad::Var> biases_;
};

/// Output value, first and second derivative along `axis` at a single point,
/// recorded on `tape` so that any of the three can be back-propagated to the
/// parameters. The tape must have been built over `net.flat`.
ad::JetVar nested_second_derivative(const NetworkParams& net, ad::Tape& tape,
                                    std::span<const double> point, int axis);

}  // namespace pinn
