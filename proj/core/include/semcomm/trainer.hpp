#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "semcomm/aoi.hpp"
#include "semcomm/config.hpp"
#include "semcomm/dqn.hpp"
#include "semcomm/grid_world.hpp"
#include "semcomm/qmix.hpp"
#include "semcomm/replay_buffer.hpp"
#include "semcomm/semantic_codec.hpp"
#include "semcomm/wireless.hpp"

namespace semcomm {

/// Training-only view of the world: full occupancy planes plus channel gains.
struct GlobalState {
  std::vector<std::uint8_t> occupancy;  // agents, preys, obstacles planes
  Eigen::VectorXd gains;                // agent-major, subchannel-minor

  Eigen::Index dim() const { return static_cast<Eigen::Index>(occupancy.size()) + gains.size(); }
  void write_into(Eigen::Ref<Eigen::VectorXd> out) const;
};

/// One CTDE sample. Agent decision inputs are stored as their raw local
/// observation plus the received part of the fused input so the encoder can
/// be re-run (and trained) at update time.
struct Transition {
  std::vector<AgentObservation> observations;
  Eigen::MatrixXf received;  // received_dim x n_agents
  std::vector<int> actions;
  Eigen::VectorXd ap_observation;
  int ap_action = -1;  // -1 when a baseline scheduler acted
  double reward = 0.0;
  GlobalState state;
  std::vector<AgentObservation> next_observations;
  Eigen::MatrixXf next_received;
  Eigen::VectorXd next_ap_observation;
  GlobalState next_state;
  bool done = false;
};

struct EpisodeMetrics {
  int episode = 0;
  bool success = false;
  double episode_total_time = 0.0;
  int captures = 0;
  int steps = 0;
  double mean_aoi = 0.0;
  double peak_aoi = 0.0;
  double td_loss_team = 0.0;
  double td_loss_ap = 0.0;
  double epsilon = 0.0;

  friend bool operator==(const EpisodeMetrics&, const EpisodeMetrics&) = default;
};

/// Optional per-step export streams.
struct TraceSinks {
  std::ostream* trajectory = nullptr;  // line-delimited JSON
  std::ostream* channel = nullptr;     // CSV rows (see traces.hpp)
};

/// Owns one experiment's environment, learners, replay memory and
/// generators. Runs the sense -> transmit -> execute cycle per step:
/// observe and encode, schedule the uplink, deliver and update AoI, fuse,
/// act, then learn from replay.
class Trainer {
 public:
  Trainer(ExperimentConfig config, std::uint64_t seed);

  /// epsilon-greedy rollout with replay updates (fixed config obstacle mode).
  EpisodeMetrics train_episode(int episode);
  /// Greedy rollout, no learning, in config.eval_obstacle_mode.
  EpisodeMetrics eval_episode(int episode);

  double epsilon_for(int episode) const;

  const ExperimentConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t team_updates() const { return team_updates_; }
  std::int64_t ap_updates() const { return ap_updates_; }
  std::size_t replay_size() const { return replay_.size(); }

  const learn::QmixNetworks& team() const { return team_; }
  const learn::QmixNetworks& team_target() const { return team_target_; }
  const nn::ParameterVector& ap_network() const { return ap_; }
  learn::QmixNetworks& mutable_team() { return team_; }

  void set_trace_sinks(TraceSinks sinks) { sinks_ = sinks; }

  /// Binary checkpoint: every parameter vector, optimizer state, counters
  /// and generator state.
  void save_checkpoint(std::ostream& out) const;
  /// Throws CHECKPOINT_MISMATCH when shapes or scheduler mode differ.
  void load_checkpoint(std::istream& in);

  learn::QmixDims team_dims() const;
  int ap_observation_dim() const;

 private:
  struct EpisodeOptions {
    int episode = 0;
    bool learn = false;
    double epsilon = 0.0;
    ObstacleMode mode = ObstacleMode::fixed_regular;
    std::uint64_t env_seed = 0;
  };

  EpisodeMetrics run_episode(const EpisodeOptions& options);
  void learn_step(double& team_loss_sum, int& team_loss_count, double& ap_loss_sum, int& ap_loss_count);
  learn::QmixBatch make_team_batch(const std::vector<const Transition*>& batch) const;
  GlobalState global_state(const GridState& state, const wireless::ChannelState& channel) const;

  ExperimentConfig config_;
  std::uint64_t seed_;
  GridWorld env_;
  learn::QmixNetworks team_;
  learn::QmixNetworks team_target_;
  std::array<nn::OptimizerState, learn::QmixNetworks::kGroups> team_opt_;
  nn::ParameterVector ap_;
  nn::ParameterVector ap_target_;
  nn::OptimizerState ap_opt_;
  ReplayBuffer<Transition> replay_;
  Rng policy_rng_;
  Rng channel_rng_;
  Rng replay_rng_;
  std::int64_t team_updates_ = 0;
  std::int64_t ap_updates_ = 0;
  std::int64_t steps_since_update_ = 0;
  TraceSinks sinks_;
};

}  // namespace semcomm
