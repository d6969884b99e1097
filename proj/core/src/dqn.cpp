#include "semcomm/dqn.hpp"

#include <cmath>

#include "semcomm/error.hpp"

namespace semcomm::learn {

int argmax(const Eigen::VectorXd& values) {
  if (values.size() == 0) throw Error(ErrorCode::precondition, "argmax of an empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best);
}

int epsilon_greedy(const Eigen::VectorXd& q_values, double epsilon, Rng& rng) {
  if (q_values.size() == 0) throw Error(ErrorCode::precondition, "no actions to choose from");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(ErrorCode::precondition, "epsilon outside [0, 1]");
  if (epsilon > 0.0 && rng.uniform() < epsilon) {
    return static_cast<int>(rng.index(static_cast<std::size_t>(q_values.size())));
  }
  return argmax(q_values);
}

double dqn_target(double reward, const Eigen::VectorXd& next_q_target, bool done, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorCode::precondition, "gamma outside [0, 1)");
  if (done) return reward;
  return reward + gamma * next_q_target.maxCoeff();
}

LossGradient dqn_loss_gradient(const nn::ParameterVector& online, const nn::ParameterVector& target,
                               std::span<const DqnSample* const> batch, double gamma) {
  if (batch.empty()) throw Error(ErrorCode::precondition, "empty batch");
  const auto b = static_cast<Eigen::Index>(batch.size());
  const int in_dim = online.input_dim();
  Eigen::MatrixXd obs(in_dim, b);
  Eigen::MatrixXd next_obs(in_dim, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    obs.col(j) = batch[static_cast<std::size_t>(j)]->observation;
    next_obs.col(j) = batch[static_cast<std::size_t>(j)]->next_observation;
  }
  const Eigen::MatrixXd next_q = nn::predict(target, next_obs);
  const nn::ForwardCache cache = nn::forward(online, obs);

  LossGradient result;
  Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(cache.output.rows(), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const DqnSample& s = *batch[static_cast<std::size_t>(j)];
    if (s.action < 0 || s.action >= cache.output.rows()) {
      throw Error(ErrorCode::out_of_range, "action index outside Q output");
    }
    const double y = dqn_target(s.reward, next_q.col(j), s.done, gamma);
    const double error = cache.output(s.action, j) - y;
    result.loss += error * error;
    upstream(s.action, j) = 2.0 * error / static_cast<double>(b);
  }
  result.loss /= static_cast<double>(b);
  result.gradient = Eigen::VectorXd::Zero(online.size());
  nn::backward(online, cache, upstream, result.gradient, false);
  return result;
}

double clip_global_norm(std::span<Eigen::VectorXd> gradients, double max_norm) {
  double squared = 0.0;
  for (const auto& g : gradients) squared += g.squaredNorm();
  const double norm = std::sqrt(squared);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : gradients) g *= scale;
  }
  return norm;
}

double dqn_update(nn::ParameterVector& online, const nn::ParameterVector& target,
                  std::span<const DqnSample* const> batch, nn::OptimizerState& state,
                  const UpdateConfig& config) {
  LossGradient lg = dqn_loss_gradient(online, target, batch, config.gamma);
  clip_global_norm(std::span<Eigen::VectorXd>(&lg.gradient, 1), config.grad_clip);
  nn::optimizer_step(online.values, lg.gradient, state, config.optimizer);
  return lg.loss;
}

void hard_sync(const nn::ParameterVector& online, nn::ParameterVector& target) {
  if (online.manifest != target.manifest) throw Error(ErrorCode::shape_mismatch, "target shape differs");
  target.values = online.values;
}

void soft_sync(const nn::ParameterVector& online, nn::ParameterVector& target, double tau) {
  if (online.manifest != target.manifest) throw Error(ErrorCode::shape_mismatch, "target shape differs");
  if (tau == 1.0) {
    target.values = online.values;
  } else if (tau != 0.0) {
    target.values = tau * online.values + (1.0 - tau) * target.values;
  }
}

bool target_sync(const nn::ParameterVector& online, nn::ParameterVector& target,
                 const TargetSync& rule, std::int64_t update_count) {
  if (rule.mode == SyncMode::soft) {
    soft_sync(online, target, rule.tau);
    return rule.tau != 0.0;
  }
  if (rule.period <= 0 || update_count % rule.period != 0) return false;
  hard_sync(online, target);
  return true;
}

}  // namespace semcomm::learn
