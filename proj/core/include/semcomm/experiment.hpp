#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "semcomm/config.hpp"
#include "semcomm/trainer.hpp"

namespace semcomm {

/// One statistic per metrics column; `success` holds the success rate.
struct MetricsStats {
  double success = 0.0;
  double episode_total_time = 0.0;
  double captures = 0.0;
  double steps = 0.0;
  double mean_aoi = 0.0;
  double peak_aoi = 0.0;
  double td_loss_team = 0.0;
  double td_loss_ap = 0.0;
  double epsilon = 0.0;
};

struct MetricsSummary {
  MetricsStats mean;
  MetricsStats median;
};

MetricsSummary summarize_metrics(std::span<const EpisodeMetrics> episodes);

/// Writes the documented header (a `#` comment line describing the columns,
/// then the column names).
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const EpisodeMetrics& m);
/// Summary rows carry `summary_mean` / `summary_median` in the episode column.
void write_summary_rows(std::ostream& out, const MetricsSummary& summary);

std::filesystem::path seed_directory(const std::filesystem::path& out_dir, std::uint64_t seed);

struct RunHooks {
  std::function<void(const EpisodeMetrics&)> on_episode;
  bool write_traces = false;  // trajectory.jsonl + channel_trace.csv (eval only)
};

struct TrainOutcome {
  std::filesystem::path metrics_csv;
  std::filesystem::path checkpoint;
  std::vector<EpisodeMetrics> episodes;
  std::int64_t team_updates = 0;
  std::int64_t ap_updates = 0;
};

/// Trains for config.n_train_episodes in the config's (fixed) obstacle mode.
/// Writes <out>/seed_<seed>/{config.txt, train_metrics.csv, checkpoint.bin};
/// the checkpoint is refreshed every checkpoint_interval episodes and at the end.
TrainOutcome run_train(const ExperimentConfig& config, std::uint64_t seed,
                       const std::filesystem::path& out_dir, const RunHooks& hooks = {});

struct EvalOutcome {
  std::filesystem::path metrics_csv;
  std::vector<EpisodeMetrics> episodes;
  MetricsSummary summary;
  std::int64_t updates_performed = 0;
};

/// Greedy evaluation over config.n_eval_episodes in eval_obstacle_mode.
/// Writes <out>/seed_<seed>/eval_metrics.csv with two summary rows appended.
EvalOutcome run_eval(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                     std::uint64_t seed, const std::filesystem::path& out_dir,
                     const RunHooks& hooks = {});

}  // namespace semcomm
