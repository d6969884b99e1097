#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "semcomm/grid_world.hpp"
#include "semcomm/nn.hpp"

namespace semcomm::codec {

struct CodecConfig {
  int feature_dim = 16;
  int encoder_hidden = 32;
  /// Weight of the L2 activation penalty on encoded features.
  double l2_penalty = 1e-3;

  std::vector<std::string> violations(int observation_dim) const;
};

struct SemanticFeature {
  Eigen::VectorXd vector;
  double importance = 0.0;
  std::int64_t gen_step = 0;
  int sender = 0;
};

/// Most recent delivered feature per sender, shared by all receivers since
/// the access point broadcasts every delivered uplink message.
struct FeatureCache {
  std::vector<std::optional<SemanticFeature>> last_delivered;

  explicit FeatureCache(int n_agents = 0) : last_delivered(static_cast<std::size_t>(n_agents)) {}
};

/// Observation -> hidden (elu) -> feature_dim (identity).
nn::Architecture encoder_architecture(int observation_dim, const CodecConfig& config);

/// Encodes one observation; importance is left at zero (see importance_score).
SemanticFeature encode(const AgentObservation& obs, const nn::ParameterVector& encoder,
                       int sender, std::int64_t gen_step);

/// Column-wise encoding of already-flattened observations.
Eigen::MatrixXd encode_batch(const Eigen::MatrixXd& observations, const nn::ParameterVector& encoder);

/// ||current - last|| when a delivered feature exists, ||current|| otherwise.
double importance_score(const SemanticFeature& current, const SemanticFeature* last_delivered);

inline double staleness_weight(std::int64_t age) { return 1.0 / (1.0 + static_cast<double>(age)); }

/// Size of the received part of a fused input: (feature_dim + 1) per other agent.
inline int received_dim(int feature_dim, int n_agents) { return (feature_dim + 1) * (n_agents - 1); }
inline int fused_dim(int feature_dim, int n_agents) {
  return feature_dim + received_dim(feature_dim, n_agents);
}

/// Decision input for the receiver `own.sender`: the own vector, then for each
/// other sender in index order its cached vector (zeros if absent) scaled by
/// 1 / (1 + age), followed by age / max_steps.
Eigen::VectorXd fuse(const SemanticFeature& own, const FeatureCache& cache,
                     std::span<const std::int64_t> ages, int max_steps);

/// The received part of fuse(); the own vector is prepended by the caller.
Eigen::VectorXd fuse_received(int receiver, int feature_dim, const FeatureCache& cache,
                              std::span<const std::int64_t> ages, int max_steps);

}  // namespace semcomm::codec
