#include "semcomm/semantic_codec.hpp"

#include <array>

#include "semcomm/error.hpp"

namespace semcomm::codec {

std::vector<std::string> CodecConfig::violations(int observation_dim) const {
  std::vector<std::string> out;
  if (feature_dim < 1) out.push_back("codec.feature_dim must be >= 1");
  if (feature_dim >= observation_dim) {
    out.push_back("codec.feature_dim must be smaller than the observation dimension " +
                  std::to_string(observation_dim));
  }
  if (encoder_hidden < 1) out.push_back("codec.encoder_hidden must be >= 1");
  if (!(l2_penalty >= 0.0)) out.push_back("codec.l2_penalty must be >= 0");
  return out;
}

nn::Architecture encoder_architecture(int observation_dim, const CodecConfig& config) {
  const std::array<int, 1> hidden{config.encoder_hidden};
  return nn::make_mlp(observation_dim, hidden, config.feature_dim, nn::Activation::elu);
}

SemanticFeature encode(const AgentObservation& obs, const nn::ParameterVector& encoder, int sender,
                       std::int64_t gen_step) {
  if (obs.flat_dim() != encoder.input_dim() ||
      obs.planes.size() != static_cast<std::size_t>(AgentObservation::kPlanes * obs.fov * obs.fov)) {
    throw Error(ErrorCode::shape_mismatch, "observation does not match encoder input");
  }
  SemanticFeature feature;
  feature.vector = nn::predict(encoder, obs.flatten()).col(0);
  feature.sender = sender;
  feature.gen_step = gen_step;
  return feature;
}

Eigen::MatrixXd encode_batch(const Eigen::MatrixXd& observations, const nn::ParameterVector& encoder) {
  return nn::predict(encoder, observations);
}

double importance_score(const SemanticFeature& current, const SemanticFeature* last_delivered) {
  if (last_delivered == nullptr) return current.vector.norm();
  if (last_delivered->vector.size() != current.vector.size()) {
    throw Error(ErrorCode::dim_mismatch, "feature dimensions differ");
  }
  return (current.vector - last_delivered->vector).norm();
}

Eigen::VectorXd fuse_received(int receiver, int feature_dim, const FeatureCache& cache,
                              std::span<const std::int64_t> ages, int max_steps) {
  const int n = static_cast<int>(cache.last_delivered.size());
  if (static_cast<int>(ages.size()) != n) throw Error(ErrorCode::dim_mismatch, "ages length differs from cache");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(received_dim(feature_dim, n));
  Eigen::Index offset = 0;
  for (int sender = 0; sender < n; ++sender) {
    if (sender == receiver) continue;
    const auto age = ages[static_cast<std::size_t>(sender)];
    const auto& cached = cache.last_delivered[static_cast<std::size_t>(sender)];
    if (cached) {
      if (cached->vector.size() != feature_dim) {
        throw Error(ErrorCode::dim_mismatch, "cached feature has wrong dimension");
      }
      out.segment(offset, feature_dim) = staleness_weight(age) * cached->vector;
    }
    out[offset + feature_dim] = static_cast<double>(age) / static_cast<double>(max_steps);
    offset += feature_dim + 1;
  }
  return out;
}

Eigen::VectorXd fuse(const SemanticFeature& own, const FeatureCache& cache,
                     std::span<const std::int64_t> ages, int max_steps) {
  const auto feature_dim = static_cast<int>(own.vector.size());
  const int n = static_cast<int>(cache.last_delivered.size());
  if (own.sender < 0 || own.sender >= n) throw Error(ErrorCode::dim_mismatch, "own sender outside cache");
  Eigen::VectorXd out(fused_dim(feature_dim, n));
  out.head(feature_dim) = own.vector;
  out.tail(received_dim(feature_dim, n)) = fuse_received(own.sender, feature_dim, cache, ages, max_steps);
  return out;
}

}  // namespace semcomm::codec
