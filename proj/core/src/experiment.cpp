#include "semcomm/experiment.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <ostream>

#include "semcomm/error.hpp"
#include "semcomm/traces.hpp"

namespace semcomm {
namespace {

constexpr const char* kColumnDoc =
    "# episode: index | success: 1 if every prey was captured | episode_total_time: seconds "
    "(steps x step duration + uplink time) | captures | steps | mean_aoi, peak_aoi: steps | "
    "td_loss_team, td_loss_ap: mean TD loss over the episode's updates (0 if none) | epsilon";

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  return out;
}

double median_of(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t mid = xs.size() / 2;
  return xs.size() % 2 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double total = 0.0;
  for (const double x : xs) total += x;
  return total / static_cast<double>(xs.size());
}

void write_checkpoint_file(const Trainer& trainer, const std::filesystem::path& path) {
  const auto staging = std::filesystem::path(path).concat(".tmp");
  {
    auto out = open_output(staging, std::ios::out | std::ios::binary);
    trainer.save_checkpoint(out);
  }
  std::filesystem::rename(staging, path);
}

void write_stats_row(std::ostream& out, const char* label, const MetricsStats& s) {
  out << label << ',' << format_float(s.success) << ',' << format_float(s.episode_total_time) << ','
      << format_float(s.captures) << ',' << format_float(s.steps) << ',' << format_float(s.mean_aoi)
      << ',' << format_float(s.peak_aoi) << ',' << format_float(s.td_loss_team) << ','
      << format_float(s.td_loss_ap) << ',' << format_float(s.epsilon) << '\n';
}

}  // namespace

MetricsSummary summarize_metrics(std::span<const EpisodeMetrics> episodes) {
  constexpr std::size_t kColumns = 9;
  std::array<std::vector<double>, kColumns> columns;
  for (const auto& e : episodes) {
    const std::array<double, kColumns> row{e.success ? 1.0 : 0.0, e.episode_total_time,
                                           static_cast<double>(e.captures), static_cast<double>(e.steps),
                                           e.mean_aoi, e.peak_aoi, e.td_loss_team, e.td_loss_ap, e.epsilon};
    for (std::size_t k = 0; k < kColumns; ++k) columns[k].push_back(row[k]);
  }
  auto stats = [&](double (*reduce)(std::vector<double>)) {
    MetricsStats s;
    s.success = reduce(columns[0]);
    s.episode_total_time = reduce(columns[1]);
    s.captures = reduce(columns[2]);
    s.steps = reduce(columns[3]);
    s.mean_aoi = reduce(columns[4]);
    s.peak_aoi = reduce(columns[5]);
    s.td_loss_team = reduce(columns[6]);
    s.td_loss_ap = reduce(columns[7]);
    s.epsilon = reduce(columns[8]);
    return s;
  };
  MetricsSummary summary;
  summary.mean = stats([](std::vector<double> xs) { return mean_of(xs); });
  summary.median = stats([](std::vector<double> xs) { return median_of(std::move(xs)); });
  return summary;
}

void write_metrics_header(std::ostream& out) { out << kColumnDoc << '\n' << kMetricsHeader << '\n'; }

void write_metrics_row(std::ostream& out, const EpisodeMetrics& m) {
  out << m.episode << ',' << (m.success ? 1 : 0) << ',' << format_float(m.episode_total_time) << ','
      << m.captures << ',' << m.steps << ',' << format_float(m.mean_aoi) << ','
      << format_float(m.peak_aoi) << ',' << format_float(m.td_loss_team) << ','
      << format_float(m.td_loss_ap) << ',' << format_float(m.epsilon) << '\n';
}

void write_summary_rows(std::ostream& out, const MetricsSummary& summary) {
  write_stats_row(out, "summary_mean", summary.mean);
  write_stats_row(out, "summary_median", summary.median);
}

std::filesystem::path seed_directory(const std::filesystem::path& out_dir, std::uint64_t seed) {
  return out_dir / ("seed_" + std::to_string(seed));
}

TrainOutcome run_train(const ExperimentConfig& config, std::uint64_t seed,
                       const std::filesystem::path& out_dir, const RunHooks& hooks) {
  config.validate();
  const auto dir = seed_directory(out_dir, seed);
  std::filesystem::create_directories(dir);
  {
    auto cfg = open_output(dir / "config.txt");
    cfg << to_text(config);
  }

  TrainOutcome outcome;
  outcome.metrics_csv = dir / "train_metrics.csv";
  outcome.checkpoint = dir / "checkpoint.bin";
  auto csv = open_output(outcome.metrics_csv);
  write_metrics_header(csv);

  Trainer trainer(config, seed);
  for (int episode = 0; episode < config.n_train_episodes; ++episode) {
    const EpisodeMetrics m = trainer.train_episode(episode);
    write_metrics_row(csv, m);
    outcome.episodes.push_back(m);
    if (hooks.on_episode) hooks.on_episode(m);
    if (config.checkpoint_interval > 0 && (episode + 1) % config.checkpoint_interval == 0) {
      csv.flush();
      write_checkpoint_file(trainer, outcome.checkpoint);
    }
  }
  write_checkpoint_file(trainer, outcome.checkpoint);
  if (!csv.flush()) throw Error(ErrorCode::io_error, "failed writing " + outcome.metrics_csv.string());
  outcome.team_updates = trainer.team_updates();
  outcome.ap_updates = trainer.ap_updates();
  return outcome;
}

EvalOutcome run_eval(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                     std::uint64_t seed, const std::filesystem::path& out_dir, const RunHooks& hooks) {
  config.validate();
  Trainer trainer(config, seed);
  {
    std::ifstream in(checkpoint, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open checkpoint " + checkpoint.string());
    trainer.load_checkpoint(in);
  }
  const auto team_before = trainer.team_updates();
  const auto ap_before = trainer.ap_updates();

  const auto dir = seed_directory(out_dir, seed);
  std::filesystem::create_directories(dir);
  EvalOutcome outcome;
  outcome.metrics_csv = dir / "eval_metrics.csv";
  auto csv = open_output(outcome.metrics_csv);
  write_metrics_header(csv);

  std::ofstream trajectory;
  std::ofstream channel;
  if (hooks.write_traces) {
    trajectory = open_output(dir / "trajectory.jsonl");
    channel = open_output(dir / "channel_trace.csv");
    channel << kChannelTraceHeader << '\n';
    trainer.set_trace_sinks({&trajectory, &channel});
  }

  for (int episode = 0; episode < config.n_eval_episodes; ++episode) {
    const EpisodeMetrics m = trainer.eval_episode(episode);
    write_metrics_row(csv, m);
    outcome.episodes.push_back(m);
    if (hooks.on_episode) hooks.on_episode(m);
  }
  outcome.summary = summarize_metrics(outcome.episodes);
  write_summary_rows(csv, outcome.summary);
  if (!csv.flush()) throw Error(ErrorCode::io_error, "failed writing " + outcome.metrics_csv.string());
  outcome.updates_performed =
      (trainer.team_updates() - team_before) + (trainer.ap_updates() - ap_before);
  return outcome;
}

}  // namespace semcomm
