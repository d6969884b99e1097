#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "semcomm/config.hpp"

// Invariant and oracle checks shared by `semcomm selftest` and the
// acceptance suite. Every tolerance lives in this file's implementation.
namespace semcomm::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Single-agent 5x5 obstacle-free grid, one stationary prey, DQN on one-hot
/// (agent, prey) inputs. Passes when the greedy policy reaches the prey in
/// exactly the BFS distance from every one of `starts` random starts within
/// `max_episodes` training episodes.
CheckResult dqn_oracle(std::uint64_t seed, int max_episodes = 5000, int starts = 100);

/// Central differences of q_tot w.r.t. each per-agent value are >= -1e-9 on
/// `triples` random (params, state, q); the per-agent argmax attains the
/// exhaustive max over all 5^4 joint actions on `instances` random instances.
CheckResult qmix_monotonicity(std::uint64_t seed, int triples = 1000, int instances = 1000);

/// Backward pass against central differences (relative error < 1e-4) on
/// `networks` random networks: plain MLPs over every activation plus the
/// encoder -> agent Q -> mixing loss.
CheckResult gradient_correctness(std::uint64_t seed, int networks = 100);

/// Gain mean within 1 +- 0.01 and a KS test against exponential(1) at the 1%
/// level over `samples` draws; max-rate scheduling equals brute force on
/// `states` random channel states.
CheckResult channel_statistics(std::uint64_t seed, int samples = 1000000, int states = 10000);

/// AoI table against an independent model over `schedules` random delivery
/// schedules: unit slope, reset to now - gen_step, zero diagonal, stale
/// deliveries ignored.
CheckResult aoi_suite(std::uint64_t seed, int schedules = 10000);

/// Trains twice with the same config and seed under `workdir` and compares
/// the metrics CSVs and checkpoints byte for byte.
CheckResult training_determinism(const ExperimentConfig& config, std::uint64_t seed,
                                 const std::filesystem::path& workdir);

/// Small config used for determinism checks (short episodes, few of them).
ExperimentConfig quick_config();

}  // namespace semcomm::checks
