#include "semcomm/nn.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "semcomm/error.hpp"
#include "semcomm/serialize.hpp"

namespace semcomm::nn {
namespace {

using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

void apply_activation(Activation activation, Eigen::MatrixXd& m) {
  switch (activation) {
    case Activation::relu: m = m.cwiseMax(0.0); break;
    case Activation::elu:
      m = m.unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
      break;
    case Activation::identity: break;
    case Activation::abs: m = m.cwiseAbs(); break;
  }
}

void check_input(const ParameterVector& params, const Eigen::MatrixXd& input) {
  if (params.manifest.empty()) throw Error(ErrorCode::shape_mismatch, "empty network");
  if (static_cast<std::size_t>(params.values.size()) != parameter_count(params.manifest)) {
    throw Error(ErrorCode::shape_mismatch, "parameter vector length does not match manifest");
  }
  if (input.rows() != params.input_dim()) {
    throw Error(ErrorCode::shape_mismatch, "input has " + std::to_string(input.rows()) +
                                               " rows, network expects " +
                                               std::to_string(params.input_dim()));
  }
}

}  // namespace

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
    case Activation::identity: return "identity";
    case Activation::abs: return "abs";
  }
  return "unknown";
}

Architecture make_mlp(int in_dim, std::span<const int> hidden, int out_dim, Activation activation,
                      Activation output_activation) {
  Architecture layers;
  int previous = in_dim;
  for (const int width : hidden) {
    layers.push_back({previous, width, activation});
    previous = width;
  }
  layers.push_back({previous, out_dim, output_activation});
  validate(layers);
  return layers;
}

void validate(const Architecture& layers) {
  if (layers.empty()) throw Error(ErrorCode::shape_mismatch, "network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].in_dim < 1 || layers[i].out_dim < 1) {
      throw Error(ErrorCode::shape_mismatch, "layer dims must be >= 1");
    }
    if (i > 0 && layers[i - 1].out_dim != layers[i].in_dim) {
      throw Error(ErrorCode::shape_mismatch,
                  "layer " + std::to_string(i) + " does not chain with its predecessor");
    }
  }
}

std::size_t parameter_count(const Architecture& layers) {
  std::size_t count = 0;
  for (const auto& layer : layers) {
    count += static_cast<std::size_t>(layer.in_dim) * layer.out_dim + layer.out_dim;
  }
  return count;
}

ParameterVector zeros(const Architecture& layers) {
  validate(layers);
  return {layers, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count(layers)))};
}

ParameterVector initialize(const Architecture& layers, Rng& rng) {
  ParameterVector params = zeros(layers);
  Eigen::Index offset = 0;
  for (const auto& layer : layers) {
    const bool rectifier =
        layer.activation == Activation::relu || layer.activation == Activation::elu;
    const double bound = std::sqrt((rectifier ? 6.0 : 3.0) / layer.in_dim);
    const Eigen::Index weights = static_cast<Eigen::Index>(layer.in_dim) * layer.out_dim;
    for (Eigen::Index i = 0; i < weights; ++i) params.values[offset + i] = rng.uniform(-bound, bound);
    offset += weights + layer.out_dim;
  }
  return params;
}

double activate(Activation activation, double x) {
  switch (activation) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::elu: return x > 0.0 ? x : std::expm1(x);
    case Activation::identity: return x;
    case Activation::abs: return std::abs(x);
  }
  return x;
}

double activate_derivative(Activation activation, double x) {
  switch (activation) {
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::elu: return x > 0.0 ? 1.0 : std::exp(x);
    case Activation::identity: return 1.0;
    case Activation::abs: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  }
  return 1.0;
}

ForwardCache forward(const ParameterVector& params, const Eigen::MatrixXd& input) {
  check_input(params, input);
  ForwardCache cache;
  cache.inputs.reserve(params.manifest.size());
  cache.preactivations.reserve(params.manifest.size());
  const double* data = params.values.data();
  Eigen::MatrixXd current = input;
  for (const auto& layer : params.manifest) {
    ConstMatrixMap weights(data, layer.out_dim, layer.in_dim);
    ConstVectorMap bias(data + static_cast<std::ptrdiff_t>(layer.out_dim) * layer.in_dim,
                        layer.out_dim);
    data += static_cast<std::ptrdiff_t>(layer.out_dim) * (layer.in_dim + 1);

    Eigen::MatrixXd pre = weights * current;
    pre.colwise() += bias;
    cache.inputs.push_back(std::move(current));
    current = pre;
    apply_activation(layer.activation, current);
    cache.preactivations.push_back(std::move(pre));
  }
  cache.output = std::move(current);
  return cache;
}

Eigen::MatrixXd predict(const ParameterVector& params, const Eigen::MatrixXd& input) {
  check_input(params, input);
  const double* data = params.values.data();
  Eigen::MatrixXd current = input;
  for (const auto& layer : params.manifest) {
    ConstMatrixMap weights(data, layer.out_dim, layer.in_dim);
    ConstVectorMap bias(data + static_cast<std::ptrdiff_t>(layer.out_dim) * layer.in_dim,
                        layer.out_dim);
    data += static_cast<std::ptrdiff_t>(layer.out_dim) * (layer.in_dim + 1);
    Eigen::MatrixXd next = weights * current;
    next.colwise() += bias;
    apply_activation(layer.activation, next);
    current = std::move(next);
  }
  return current;
}

Eigen::MatrixXd backward(const ParameterVector& params, const ForwardCache& cache,
                         const Eigen::MatrixXd& upstream, Eigen::VectorXd& gradient,
                         bool input_gradient) {
  const std::size_t depth = params.manifest.size();
  if (cache.preactivations.size() != depth || upstream.rows() != cache.output.rows() ||
      upstream.cols() != cache.output.cols()) {
    throw Error(ErrorCode::shape_mismatch, "upstream gradient does not match forward cache");
  }
  if (gradient.size() == 0) gradient = Eigen::VectorXd::Zero(params.values.size());
  if (gradient.size() != params.values.size()) {
    throw Error(ErrorCode::shape_mismatch, "gradient buffer has wrong length");
  }

  std::vector<Eigen::Index> offsets(depth);
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < depth; ++l) {
    offsets[l] = offset;
    offset += static_cast<Eigen::Index>(params.manifest[l].out_dim) *
              (params.manifest[l].in_dim + 1);
  }

  Eigen::MatrixXd delta = upstream;
  for (std::size_t l = depth; l-- > 0;) {
    const LayerSpec& layer = params.manifest[l];
    const Eigen::MatrixXd& pre = cache.preactivations[l];
    if (layer.activation != Activation::identity) {
      const Activation act = layer.activation;
      delta = delta.cwiseProduct(pre.unaryExpr([act](double x) { return activate_derivative(act, x); }));
    }
    const Eigen::Index weight_count = static_cast<Eigen::Index>(layer.out_dim) * layer.in_dim;
    Eigen::Map<Eigen::MatrixXd> grad_w(gradient.data() + offsets[l], layer.out_dim, layer.in_dim);
    Eigen::Map<Eigen::VectorXd> grad_b(gradient.data() + offsets[l] + weight_count, layer.out_dim);
    grad_w.noalias() += delta * cache.inputs[l].transpose();
    grad_b += delta.rowwise().sum();

    if (l == 0 && !input_gradient) return {};
    ConstMatrixMap weights(params.values.data() + offsets[l], layer.out_dim, layer.in_dim);
    delta = weights.transpose() * delta;
  }
  return delta;
}

void optimizer_step(Eigen::VectorXd& params, const Eigen::VectorXd& gradient,
                    OptimizerState& state, const OptimizerConfig& config) {
  if (gradient.size() != params.size()) {
    throw Error(ErrorCode::shape_mismatch, "gradient and parameter lengths differ");
  }
  ++state.steps;
  if (config.kind == OptimizerKind::sgd) {
    params -= config.learning_rate * gradient;
    return;
  }
  if (state.first_moment.size() != params.size()) {
    state.first_moment = Eigen::VectorXd::Zero(params.size());
    state.second_moment = Eigen::VectorXd::Zero(params.size());
  }
  state.first_moment = config.beta1 * state.first_moment + (1.0 - config.beta1) * gradient;
  state.second_moment =
      config.beta2 * state.second_moment + (1.0 - config.beta2) * gradient.cwiseAbs2();
  const double t = static_cast<double>(state.steps);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  params.array() -= config.learning_rate * (state.first_moment.array() / correction1) /
                    ((state.second_moment.array() / correction2).sqrt() + config.epsilon);
}

void write(std::ostream& out, const ParameterVector& params) {
  io::write_u32(out, static_cast<std::uint32_t>(params.manifest.size()));
  for (const auto& layer : params.manifest) {
    io::write_u32(out, static_cast<std::uint32_t>(layer.in_dim));
    io::write_u32(out, static_cast<std::uint32_t>(layer.out_dim));
    io::write_u32(out, static_cast<std::uint32_t>(layer.activation));
  }
  for (Eigen::Index i = 0; i < params.values.size(); ++i) io::write_f64(out, params.values[i]);
}

ParameterVector read(std::istream& in) {
  const std::uint32_t layer_count = io::read_u32(in);
  if (layer_count == 0 || layer_count > 1024) {
    throw Error(ErrorCode::checkpoint_mismatch, "implausible layer count");
  }
  Architecture manifest(layer_count);
  for (auto& layer : manifest) {
    layer.in_dim = static_cast<int>(io::read_u32(in));
    layer.out_dim = static_cast<int>(io::read_u32(in));
    const std::uint32_t activation = io::read_u32(in);
    if (activation > static_cast<std::uint32_t>(Activation::abs)) {
      throw Error(ErrorCode::checkpoint_mismatch, "unknown activation code");
    }
    layer.activation = static_cast<Activation>(activation);
  }
  ParameterVector params = zeros(manifest);
  for (Eigen::Index i = 0; i < params.values.size(); ++i) params.values[i] = io::read_f64(in);
  return params;
}

void write(std::ostream& out, const OptimizerState& state) {
  io::write_u64(out, static_cast<std::uint64_t>(state.steps));
  io::write_u64(out, static_cast<std::uint64_t>(state.first_moment.size()));
  for (Eigen::Index i = 0; i < state.first_moment.size(); ++i) io::write_f64(out, state.first_moment[i]);
  for (Eigen::Index i = 0; i < state.second_moment.size(); ++i) io::write_f64(out, state.second_moment[i]);
}

OptimizerState read_optimizer_state(std::istream& in) {
  OptimizerState state;
  state.steps = static_cast<std::int64_t>(io::read_u64(in));
  const std::uint64_t size = io::read_u64(in);
  if (size > (1ULL << 28)) throw Error(ErrorCode::checkpoint_mismatch, "implausible optimizer size");
  state.first_moment.resize(static_cast<Eigen::Index>(size));
  state.second_moment.resize(static_cast<Eigen::Index>(size));
  for (auto& x : state.first_moment) x = io::read_f64(in);
  for (auto& x : state.second_moment) x = io::read_f64(in);
  return state;
}

}  // namespace semcomm::nn
