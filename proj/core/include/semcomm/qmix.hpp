#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "semcomm/dqn.hpp"
#include "semcomm/nn.hpp"
#include "semcomm/rng.hpp"

// Monotonic value factorization for the predator team.
//
// Every predator runs the same encoder and Q-network (parameter sharing with
// a one-hot id). The agent network input is
//   [encoder(observation); received part of the fused input; one_hot(id)].
// A state-conditioned hypernetwork produces the mixing weights; the weights
// that multiply per-agent values pass through |.| so q_tot is monotone in
// every per-agent value.
namespace semcomm::learn {

struct QmixDims {
  int n_agents = 4;
  int observation_dim = 198;
  int feature_dim = 16;
  int n_actions = 5;
  int state_dim = 1208;

  int received_dim() const { return (feature_dim + 1) * (n_agents - 1); }
  int agent_input_dim() const { return feature_dim + received_dim() + n_agents; }
};

struct QmixShape {
  int encoder_hidden = 32;
  std::vector<int> agent_hidden{64, 64};
  int hyper_hidden = 32;
  int mixing_embed = 16;
};

struct QmixNetworks {
  static constexpr int kGroups = 7;

  nn::ParameterVector encoder;
  nn::ParameterVector agent_q;
  nn::ParameterVector hyper_trunk;  // state -> hyper_hidden (elu)
  nn::ParameterVector hyper_w1;     // -> embed * n_agents (abs)
  nn::ParameterVector hyper_b1;     // -> embed (identity)
  nn::ParameterVector hyper_w2;     // -> embed (abs)
  nn::ParameterVector hyper_b2;     // -> 1 (identity)

  std::array<nn::ParameterVector*, kGroups> groups();
  std::array<const nn::ParameterVector*, kGroups> groups() const;
  int n_agents() const;
  int embed() const { return hyper_b1.output_dim(); }

  friend bool operator==(const QmixNetworks&, const QmixNetworks&) = default;
};

QmixNetworks make_qmix_networks(const QmixDims& dims, const QmixShape& shape, Rng& rng);

struct MixerWeights {
  Eigen::MatrixXd w1;  // embed x n_agents, entrywise >= 0
  Eigen::VectorXd b1;  // embed
  Eigen::VectorXd w2;  // embed, entrywise >= 0
  double b2 = 0.0;
};

MixerWeights mixer_weights(const QmixNetworks& nets, const Eigen::VectorXd& state);

/// q_tot = w2' elu(W1 q + b1) + b2.
double mix(const MixerWeights& weights, const Eigen::VectorXd& per_agent_q);

/// Throws SHAPE_MISMATCH when q or state do not fit the networks.
double qmix_mix(const Eigen::VectorXd& per_agent_q, const Eigen::VectorXd& global_state,
                const QmixNetworks& nets);

/// Agent-network inputs for column-stacked samples; column c belongs to
/// agent c % n_agents.
Eigen::MatrixXd agent_inputs(const Eigen::MatrixXd& features, const Eigen::MatrixXd& received,
                             int n_agents);

/// Per-agent Q values (n_actions x columns) for raw observations.
Eigen::MatrixXd agent_q_values(const QmixNetworks& nets, const Eigen::MatrixXd& observations,
                               const Eigen::MatrixXd& received);

/// Training batch; agent columns are ordered sample-major (column b * n + i).
struct QmixBatch {
  int n_agents = 0;
  Eigen::MatrixXd observations;  // observation_dim x (B * n)
  Eigen::MatrixXd received;      // received_dim x (B * n)
  std::vector<int> actions;      // B * n
  Eigen::VectorXd rewards;       // B
  Eigen::MatrixXd states;        // state_dim x B
  Eigen::MatrixXd next_observations;
  Eigen::MatrixXd next_received;
  Eigen::MatrixXd next_states;
  std::vector<std::uint8_t> done;  // B

  int size() const { return static_cast<int>(rewards.size()); }
};

/// y = r + gamma * (1 - done) * q_tot_target(per-agent greedy next actions).
Eigen::VectorXd qmix_targets(const QmixNetworks& target, const QmixBatch& batch, double gamma);

struct QmixLoss {
  double td_loss = 0.0;     // mean squared TD error
  double total_loss = 0.0;  // td_loss + L2 feature penalty
  std::array<Eigen::VectorXd, QmixNetworks::kGroups> gradients;  // aligned with groups()
};

/// Loss and exact gradients for every online parameter group, with targets
/// computed from `target` (held constant).
QmixLoss qmix_loss_gradient(const QmixNetworks& online, const QmixNetworks& target,
                            const QmixBatch& batch, double gamma, double l2_penalty);

/// Same loss as qmix_loss_gradient with precomputed targets.
QmixLoss qmix_loss_gradient(const QmixNetworks& online, const Eigen::VectorXd& targets,
                            const QmixBatch& batch, double l2_penalty);

/// One optimizer step over all groups. Returns the pre-update TD loss.
double qmix_update(QmixNetworks& online, const QmixNetworks& target, const QmixBatch& batch,
                   double l2_penalty, std::array<nn::OptimizerState, QmixNetworks::kGroups>& states,
                   const UpdateConfig& config);

void target_sync(const QmixNetworks& online, QmixNetworks& target, const TargetSync& rule,
                 std::int64_t update_count);

}  // namespace semcomm::learn
