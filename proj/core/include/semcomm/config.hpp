#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semcomm/grid_world.hpp"
#include "semcomm/nn.hpp"
#include "semcomm/semantic_codec.hpp"
#include "semcomm/wireless.hpp"

namespace semcomm {

/// Access-point policy: learned DQN, or one of the two data-oriented baselines.
enum class SchedulerMode { learned, random, max_rate };

std::string to_string(SchedulerMode mode);

struct LearnerConfig {
  double gamma = 0.99;
  std::size_t buffer_capacity = 100000;
  int batch_size = 64;
  nn::OptimizerKind optimizer = nn::OptimizerKind::adam;
  double learning_rate = 5e-4;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_anneal_fraction = 0.3;
  int target_sync_period = 500;
  /// Environment steps between gradient updates.
  int train_interval = 8;
  double grad_clip = 10.0;
  /// Reward cost per second of uplink time; 1 / step_duration by default so
  /// a full-step transmission costs one reward unit.
  double lambda_time = 1.0 / 3e-4;
  double lambda_aoi = 0.0;
  std::vector<int> agent_hidden{64, 64};
  std::vector<int> ap_hidden{64, 64};
  int hyper_hidden = 32;
  int mixing_embed = 16;
};

struct ExperimentConfig {
  GridConfig grid;
  wireless::WirelessConfig wireless;
  codec::CodecConfig codec;
  LearnerConfig learner;
  SchedulerMode scheduler_mode = SchedulerMode::learned;
  int n_train_episodes = 20000;
  int n_eval_episodes = 1000;
  ObstacleMode eval_obstacle_mode = ObstacleMode::dynamic_density;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "runs";
  /// Episodes between checkpoint writes during training (0 = only at the end).
  int checkpoint_interval = 1000;

  ExperimentConfig();

  std::vector<std::string> violations() const;
  /// Throws VALIDATION_ERROR listing every violated invariant.
  void validate() const;

  int observation_dim() const { return AgentObservation::flat_dim(grid.fov); }
  int payload_bits() const { return codec.feature_dim * wireless.bits_per_element; }
};

/// Parses flat `section.key = value` text. Blank lines and `#` comments are
/// ignored; omitted keys keep their defaults. Unknown keys and malformed
/// values raise PARSE_ERROR naming the line and key; the result is validated.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& file);

/// Canonical text form; parse_config_text(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

}  // namespace semcomm
