#include "semcomm/qmix.hpp"

#include <cmath>
#include <span>

#include "semcomm/error.hpp"
#include "semcomm/semantic_codec.hpp"

namespace semcomm::learn {
namespace {

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_derivative(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

struct HyperOutputs {
  nn::ForwardCache trunk, w1, b1, w2, b2;
};

HyperOutputs hyper_forward(const QmixNetworks& nets, const Eigen::MatrixXd& states) {
  HyperOutputs out;
  out.trunk = nn::forward(nets.hyper_trunk, states);
  out.w1 = nn::forward(nets.hyper_w1, out.trunk.output);
  out.b1 = nn::forward(nets.hyper_b1, out.trunk.output);
  out.w2 = nn::forward(nets.hyper_w2, out.trunk.output);
  out.b2 = nn::forward(nets.hyper_b2, out.trunk.output);
  return out;
}

/// q_tot for each column of `per_agent_q` (n x B) with hypernet outputs
/// evaluated on the matching state columns.
Eigen::VectorXd mix_columns(const QmixNetworks& nets, const Eigen::MatrixXd& per_agent_q,
                            const Eigen::MatrixXd& states) {
  const int n = nets.n_agents();
  const int embed = nets.embed();
  const Eigen::MatrixXd trunk = nn::predict(nets.hyper_trunk, states);
  const Eigen::MatrixXd w1 = nn::predict(nets.hyper_w1, trunk);
  const Eigen::MatrixXd b1 = nn::predict(nets.hyper_b1, trunk);
  const Eigen::MatrixXd w2 = nn::predict(nets.hyper_w2, trunk);
  const Eigen::MatrixXd b2 = nn::predict(nets.hyper_b2, trunk);
  Eigen::VectorXd q_tot(per_agent_q.cols());
  for (Eigen::Index b = 0; b < per_agent_q.cols(); ++b) {
    const Eigen::Map<const Eigen::MatrixXd> w1b(w1.col(b).data(), embed, n);
    const Eigen::VectorXd hidden = (w1b * per_agent_q.col(b) + b1.col(b)).unaryExpr(&elu);
    q_tot[b] = w2.col(b).dot(hidden) + b2(0, b);
  }
  return q_tot;
}

}  // namespace

std::array<nn::ParameterVector*, QmixNetworks::kGroups> QmixNetworks::groups() {
  return {&encoder, &agent_q, &hyper_trunk, &hyper_w1, &hyper_b1, &hyper_w2, &hyper_b2};
}

std::array<const nn::ParameterVector*, QmixNetworks::kGroups> QmixNetworks::groups() const {
  return {&encoder, &agent_q, &hyper_trunk, &hyper_w1, &hyper_b1, &hyper_w2, &hyper_b2};
}

int QmixNetworks::n_agents() const { return hyper_w1.output_dim() / hyper_b1.output_dim(); }

QmixNetworks make_qmix_networks(const QmixDims& dims, const QmixShape& shape, Rng& rng) {
  using nn::Activation;
  QmixNetworks nets;
  codec::CodecConfig codec_config;
  codec_config.feature_dim = dims.feature_dim;
  codec_config.encoder_hidden = shape.encoder_hidden;
  nets.encoder = nn::initialize(codec::encoder_architecture(dims.observation_dim, codec_config), rng);
  nets.agent_q = nn::initialize(
      nn::make_mlp(dims.agent_input_dim(), shape.agent_hidden, dims.n_actions, Activation::elu), rng);
  const int hyper = shape.hyper_hidden;
  const int embed = shape.mixing_embed;
  nets.hyper_trunk = nn::initialize({{dims.state_dim, hyper, Activation::elu}}, rng);
  nets.hyper_w1 = nn::initialize({{hyper, embed * dims.n_agents, Activation::abs}}, rng);
  nets.hyper_b1 = nn::initialize({{hyper, embed, Activation::identity}}, rng);
  nets.hyper_w2 = nn::initialize({{hyper, embed, Activation::abs}}, rng);
  nets.hyper_b2 = nn::initialize({{hyper, 1, Activation::identity}}, rng);
  return nets;
}

MixerWeights mixer_weights(const QmixNetworks& nets, const Eigen::VectorXd& state) {
  if (state.size() != nets.hyper_trunk.input_dim()) {
    throw Error(ErrorCode::shape_mismatch, "global state has wrong dimension");
  }
  const int n = nets.n_agents();
  const int embed = nets.embed();
  const Eigen::MatrixXd trunk = nn::predict(nets.hyper_trunk, state);
  MixerWeights w;
  const Eigen::MatrixXd w1 = nn::predict(nets.hyper_w1, trunk);
  w.w1 = Eigen::Map<const Eigen::MatrixXd>(w1.data(), embed, n);
  w.b1 = nn::predict(nets.hyper_b1, trunk).col(0);
  w.w2 = nn::predict(nets.hyper_w2, trunk).col(0);
  w.b2 = nn::predict(nets.hyper_b2, trunk)(0, 0);
  return w;
}

double mix(const MixerWeights& weights, const Eigen::VectorXd& per_agent_q) {
  if (per_agent_q.size() != weights.w1.cols()) {
    throw Error(ErrorCode::shape_mismatch, "per-agent value count differs from mixer width");
  }
  const Eigen::VectorXd hidden = (weights.w1 * per_agent_q + weights.b1).unaryExpr(&elu);
  return weights.w2.dot(hidden) + weights.b2;
}

double qmix_mix(const Eigen::VectorXd& per_agent_q, const Eigen::VectorXd& global_state,
                const QmixNetworks& nets) {
  return mix(mixer_weights(nets, global_state), per_agent_q);
}

Eigen::MatrixXd agent_inputs(const Eigen::MatrixXd& features, const Eigen::MatrixXd& received,
                             int n_agents) {
  if (features.cols() != received.cols() || features.cols() % n_agents != 0) {
    throw Error(ErrorCode::shape_mismatch, "feature and received columns disagree");
  }
  const Eigen::Index f = features.rows();
  const Eigen::Index r = received.rows();
  Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(f + r + n_agents, features.cols());
  inputs.topRows(f) = features;
  inputs.middleRows(f, r) = received;
  for (Eigen::Index c = 0; c < features.cols(); ++c) inputs(f + r + c % n_agents, c) = 1.0;
  return inputs;
}

Eigen::MatrixXd agent_q_values(const QmixNetworks& nets, const Eigen::MatrixXd& observations,
                               const Eigen::MatrixXd& received) {
  const Eigen::MatrixXd features = nn::predict(nets.encoder, observations);
  return nn::predict(nets.agent_q, agent_inputs(features, received, nets.n_agents()));
}

Eigen::VectorXd qmix_targets(const QmixNetworks& target, const QmixBatch& batch, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorCode::precondition, "gamma outside [0, 1)");
  const int n = batch.n_agents;
  const int b = batch.size();
  const Eigen::MatrixXd next_q =
      agent_q_values(target, batch.next_observations, batch.next_received);
  Eigen::MatrixXd greedy(n, b);
  for (int s = 0; s < b; ++s) {
    for (int i = 0; i < n; ++i) greedy(i, s) = next_q.col(s * n + i).maxCoeff();
  }
  const Eigen::VectorXd next_tot = mix_columns(target, greedy, batch.next_states);
  Eigen::VectorXd y(b);
  for (int s = 0; s < b; ++s) {
    y[s] = batch.rewards[s] + (batch.done[static_cast<std::size_t>(s)] ? 0.0 : gamma * next_tot[s]);
  }
  return y;
}

QmixLoss qmix_loss_gradient(const QmixNetworks& online, const QmixNetworks& target,
                            const QmixBatch& batch, double gamma, double l2_penalty) {
  return qmix_loss_gradient(online, qmix_targets(target, batch, gamma), batch, l2_penalty);
}

QmixLoss qmix_loss_gradient(const QmixNetworks& online, const Eigen::VectorXd& targets,
                            const QmixBatch& batch, double l2_penalty) {
  const int n = batch.n_agents;
  const int b = batch.size();
  if (b == 0) throw Error(ErrorCode::precondition, "empty batch");
  if (n != online.n_agents() || batch.observations.cols() != static_cast<Eigen::Index>(b) * n ||
      static_cast<int>(batch.actions.size()) != b * n || batch.states.cols() != b ||
      targets.size() != b) {
    throw Error(ErrorCode::shape_mismatch, "QMIX batch is inconsistent");
  }
  const int embed = online.embed();
  const Eigen::Index columns = static_cast<Eigen::Index>(b) * n;

  const nn::ForwardCache enc = nn::forward(online.encoder, batch.observations);
  const nn::ForwardCache agent = nn::forward(online.agent_q, agent_inputs(enc.output, batch.received, n));
  const HyperOutputs hyper = hyper_forward(online, batch.states);

  QmixLoss result;
  Eigen::MatrixXd d_agent_q = Eigen::MatrixXd::Zero(agent.output.rows(), columns);
  Eigen::MatrixXd d_w1(embed * n, b);
  Eigen::MatrixXd d_b1(embed, b);
  Eigen::MatrixXd d_w2(embed, b);
  Eigen::MatrixXd d_b2(1, b);

  Eigen::VectorXd q(n);
  for (int s = 0; s < b; ++s) {
    for (int i = 0; i < n; ++i) {
      const int a = batch.actions[static_cast<std::size_t>(s * n + i)];
      if (a < 0 || a >= agent.output.rows()) throw Error(ErrorCode::out_of_range, "action index");
      q[i] = agent.output(a, s * n + i);
    }
    const Eigen::Map<const Eigen::MatrixXd> w1(hyper.w1.output.col(s).data(), embed, n);
    const Eigen::VectorXd pre = w1 * q + hyper.b1.output.col(s);
    const Eigen::VectorXd hidden = pre.unaryExpr(&elu);
    const auto w2 = hyper.w2.output.col(s);
    const double q_tot = w2.dot(hidden) + hyper.b2.output(0, s);

    const double error = q_tot - targets[s];
    result.td_loss += error * error;
    const double g = 2.0 * error / b;
    const Eigen::VectorXd d_pre = g * w2.cwiseProduct(pre.unaryExpr(&elu_derivative));
    Eigen::Map<Eigen::MatrixXd>(d_w1.col(s).data(), embed, n) = d_pre * q.transpose();
    d_b1.col(s) = d_pre;
    d_w2.col(s) = g * hidden;
    d_b2(0, s) = g;
    const Eigen::VectorXd d_q = w1.transpose() * d_pre;
    for (int i = 0; i < n; ++i) {
      d_agent_q(batch.actions[static_cast<std::size_t>(s * n + i)], s * n + i) = d_q[i];
    }
  }
  result.td_loss /= b;
  const double penalty_scale = l2_penalty / static_cast<double>(columns);
  result.total_loss = result.td_loss + penalty_scale * enc.output.squaredNorm();

  auto& grads = result.gradients;
  for (int k = 0; k < QmixNetworks::kGroups; ++k) {
    grads[static_cast<std::size_t>(k)] = Eigen::VectorXd::Zero(online.groups()[static_cast<std::size_t>(k)]->size());
  }
  Eigen::MatrixXd d_trunk = nn::backward(online.hyper_w1, hyper.w1, d_w1, grads[3]);
  d_trunk += nn::backward(online.hyper_b1, hyper.b1, d_b1, grads[4]);
  d_trunk += nn::backward(online.hyper_w2, hyper.w2, d_w2, grads[5]);
  d_trunk += nn::backward(online.hyper_b2, hyper.b2, d_b2, grads[6]);
  nn::backward(online.hyper_trunk, hyper.trunk, d_trunk, grads[2], false);

  const Eigen::MatrixXd d_inputs = nn::backward(online.agent_q, agent, d_agent_q, grads[1]);
  const Eigen::MatrixXd d_features =
      d_inputs.topRows(enc.output.rows()) + 2.0 * penalty_scale * enc.output;
  nn::backward(online.encoder, enc, d_features, grads[0], false);
  return result;
}

double qmix_update(QmixNetworks& online, const QmixNetworks& target, const QmixBatch& batch,
                   double l2_penalty, std::array<nn::OptimizerState, QmixNetworks::kGroups>& states,
                   const UpdateConfig& config) {
  QmixLoss loss = qmix_loss_gradient(online, target, batch, config.gamma, l2_penalty);
  clip_global_norm(std::span<Eigen::VectorXd>(loss.gradients), config.grad_clip);
  auto groups = online.groups();
  for (std::size_t k = 0; k < groups.size(); ++k) {
    nn::optimizer_step(groups[k]->values, loss.gradients[k], states[k], config.optimizer);
  }
  return loss.td_loss;
}

void target_sync(const QmixNetworks& online, QmixNetworks& target, const TargetSync& rule,
                 std::int64_t update_count) {
  const auto src = online.groups();
  auto dst = target.groups();
  for (std::size_t k = 0; k < src.size(); ++k) target_sync(*src[k], *dst[k], rule, update_count);
}

}  // namespace semcomm::learn
