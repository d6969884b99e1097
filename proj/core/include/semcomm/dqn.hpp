#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "semcomm/nn.hpp"
#include "semcomm/rng.hpp"

namespace semcomm::learn {

/// Greedy action with the lowest index on ties.
int argmax(const Eigen::VectorXd& values);

/// Greedy with probability 1 - epsilon, otherwise uniform over all actions.
int epsilon_greedy(const Eigen::VectorXd& q_values, double epsilon, Rng& rng);

/// reward if done, else reward + gamma * max(next_q_target). gamma in [0, 1).
double dqn_target(double reward, const Eigen::VectorXd& next_q_target, bool done, double gamma);

struct DqnSample {
  Eigen::VectorXd observation;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_observation;
  bool done = false;
};

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

/// Mean squared TD error of Q(s, a) against dqn_target built from the target
/// network, and its gradient with respect to the online parameters.
LossGradient dqn_loss_gradient(const nn::ParameterVector& online, const nn::ParameterVector& target,
                               std::span<const DqnSample* const> batch, double gamma);

/// Rescales `gradients` jointly so their global L2 norm is at most max_norm
/// (no-op when max_norm <= 0). Returns the norm before clipping.
double clip_global_norm(std::span<Eigen::VectorXd> gradients, double max_norm);

struct UpdateConfig {
  double gamma = 0.99;
  nn::OptimizerConfig optimizer;
  double grad_clip = 10.0;
};

/// One optimizer step on the online network; the target is untouched.
/// Returns the pre-update loss.
double dqn_update(nn::ParameterVector& online, const nn::ParameterVector& target,
                  std::span<const DqnSample* const> batch, nn::OptimizerState& state,
                  const UpdateConfig& config);

enum class SyncMode { hard, soft };

struct TargetSync {
  SyncMode mode = SyncMode::hard;
  std::int64_t period = 500;  // hard: copy every `period` updates
  double tau = 0.005;          // soft: target <- tau * online + (1 - tau) * target
};

void hard_sync(const nn::ParameterVector& online, nn::ParameterVector& target);
void soft_sync(const nn::ParameterVector& online, nn::ParameterVector& target, double tau);

/// Applies the sync rule after the `update_count`-th update. Returns true if
/// the target changed.
bool target_sync(const nn::ParameterVector& online, nn::ParameterVector& target,
                 const TargetSync& rule, std::int64_t update_count);

}  // namespace semcomm::learn
