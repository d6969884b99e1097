#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "semcomm/rng.hpp"

// Minimal fully-connected networks with hand-written reverse mode.
//
// Batches are column-major: each column of an input matrix is one sample.
// A layer's parameters are stored as W (out x in, column-major) followed by
// b (out) inside a single flat vector, layer after layer.
namespace semcomm::nn {

enum class Activation : std::uint32_t { relu = 0, elu = 1, identity = 2, abs = 3 };

std::string_view to_string(Activation activation);

struct LayerSpec {
  int in_dim = 1;
  int out_dim = 1;
  Activation activation = Activation::identity;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

using Architecture = std::vector<LayerSpec>;

/// Stacks `hidden` layers of `activation` between in_dim and out_dim; the
/// output layer uses `output_activation`.
Architecture make_mlp(int in_dim, std::span<const int> hidden, int out_dim,
                      Activation activation, Activation output_activation = Activation::identity);

/// Throws SHAPE_MISMATCH unless dims are >= 1 and consecutive layers chain.
void validate(const Architecture& layers);

std::size_t parameter_count(const Architecture& layers);

struct ParameterVector {
  Architecture manifest;
  Eigen::VectorXd values;

  int input_dim() const { return manifest.front().in_dim; }
  int output_dim() const { return manifest.back().out_dim; }
  Eigen::Index size() const { return values.size(); }

  friend bool operator==(const ParameterVector& a, const ParameterVector& b) {
    return a.manifest == b.manifest && a.values.size() == b.values.size() &&
           a.values == b.values;
  }
};

ParameterVector zeros(const Architecture& layers);

/// Uniform fan-in initialization: He-uniform bound sqrt(6/fan_in) for
/// relu/elu layers, sqrt(3/fan_in) otherwise; biases start at zero.
ParameterVector initialize(const Architecture& layers, Rng& rng);

double activate(Activation activation, double x);
double activate_derivative(Activation activation, double x);

struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;          // input to each layer
  std::vector<Eigen::MatrixXd> preactivations;  // affine output of each layer
  Eigen::MatrixXd output;
};

ForwardCache forward(const ParameterVector& params, const Eigen::MatrixXd& input);

/// Forward pass without caching intermediates.
Eigen::MatrixXd predict(const ParameterVector& params, const Eigen::MatrixXd& input);

/// Reverse pass. Adds dL/dparams into `gradient` (resized and zeroed if
/// empty) and returns dL/dinput, or an empty matrix when `input_gradient`
/// is false.
Eigen::MatrixXd backward(const ParameterVector& params, const ForwardCache& cache,
                         const Eigen::MatrixXd& upstream, Eigen::VectorXd& gradient,
                         bool input_gradient = true);

enum class OptimizerKind : std::uint32_t { adam = 0, sgd = 1 };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t steps = 0;

  friend bool operator==(const OptimizerState& a, const OptimizerState& b) {
    return a.steps == b.steps && a.first_moment.size() == b.first_moment.size() &&
           a.first_moment == b.first_moment && a.second_moment == b.second_moment;
  }
};

/// One Adam (bias-corrected) or plain SGD step in place.
void optimizer_step(Eigen::VectorXd& params, const Eigen::VectorXd& gradient,
                    OptimizerState& state, const OptimizerConfig& config);

/// Parameter file layout (all little-endian):
///   u32 layer_count, then per layer u32 in_dim, u32 out_dim, u32 activation,
///   then parameter_count(manifest) IEEE-754 binary64 values.
void write(std::ostream& out, const ParameterVector& params);
ParameterVector read(std::istream& in);

void write(std::ostream& out, const OptimizerState& state);
OptimizerState read_optimizer_state(std::istream& in);

}  // namespace semcomm::nn
