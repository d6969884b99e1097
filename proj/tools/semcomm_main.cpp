// semcomm: train, evaluate and self-check the multi-agent communication simulator.
#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "semcomm/checks.hpp"
#include "semcomm/config.hpp"
#include "semcomm/error.hpp"
#include "semcomm/experiment.hpp"

namespace {

semcomm::ExperimentConfig load_config(const std::string& path) {
  return path.empty() ? semcomm::ExperimentConfig{} : semcomm::parse_config(path);
}

semcomm::RunHooks progress_hooks(int total, int every) {
  semcomm::RunHooks hooks;
  if (every <= 0) return hooks;
  hooks.on_episode = [total, every](const semcomm::EpisodeMetrics& m) {
    if ((m.episode + 1) % every == 0 || m.episode + 1 == total) {
      std::cerr << "episode " << (m.episode + 1) << "/" << total << " success=" << m.success
                << " time=" << m.episode_total_time << " eps=" << m.epsilon << '\n';
    }
  };
  return hooks;
}

int run_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::optional<std::string>& out, int log_every) {
  const auto config = load_config(config_path);
  const std::string out_dir = out.value_or(config.output_dir);
  const std::vector<std::uint64_t> seeds = seed ? std::vector<std::uint64_t>{*seed} : config.seeds;
  for (const auto s : seeds) {
    const auto outcome =
        semcomm::run_train(config, s, out_dir, progress_hooks(config.n_train_episodes, log_every));
    std::cout << "metrics: " << outcome.metrics_csv.string() << '\n'
              << "checkpoint: " << outcome.checkpoint.string() << '\n'
              << "team updates: " << outcome.team_updates << ", ap updates: " << outcome.ap_updates << '\n';
  }
  return 0;
}

int run_eval(const std::string& config_path, const std::string& checkpoint, std::optional<std::uint64_t> seed,
             const std::optional<std::string>& out, bool traces, int log_every) {
  const auto config = load_config(config_path);
  const std::uint64_t eval_seed = seed.value_or(config.seeds.front());
  auto hooks = progress_hooks(config.n_eval_episodes, log_every);
  hooks.write_traces = traces;
  const auto outcome = semcomm::run_eval(config, checkpoint, eval_seed, out.value_or(config.output_dir), hooks);
  std::cout << "metrics: " << outcome.metrics_csv.string() << '\n'
            << "success rate: " << outcome.summary.mean.success << '\n'
            << "episode_total_time mean: " << outcome.summary.mean.episode_total_time
            << ", median: " << outcome.summary.median.episode_total_time << '\n';
  return 0;
}

int run_selftest(std::uint64_t seed, const std::string& workdir) {
  const std::filesystem::path dir =
      workdir.empty() ? std::filesystem::temp_directory_path() / ("semcomm_selftest_" + std::to_string(seed))
                      : std::filesystem::path(workdir);
  std::filesystem::remove_all(dir);
  bool all = true;
  auto report = [&](const semcomm::checks::CheckResult& r) {
    all = all && r.passed;
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << std::endl;
  };
  report(semcomm::checks::dqn_oracle(seed));
  report(semcomm::checks::qmix_monotonicity(seed));
  report(semcomm::checks::gradient_correctness(seed));
  report(semcomm::checks::channel_statistics(seed));
  report(semcomm::checks::aoi_suite(seed));
  report(semcomm::checks::training_determinism(semcomm::checks::quick_config(), seed, dir));
  std::filesystem::remove_all(dir);
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-oriented multi-agent communication simulator and trainer"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> train_seed;
  std::uint64_t seed = 1;
  int log_every = 100;

  auto* train = app.add_subcommand("train", "Train one scheduler mode for one seed");
  train->add_option("--config", config_path, "Config file (flat section.key = value)")->check(CLI::ExistingFile);
  train->add_option("--seed", train_seed, "Experiment seed (default: every config seed in turn)");
  train->add_option("--out", out_dir, "Output directory (default: config output_dir); results go to <out>/seed_<n>");
  train->add_option("--log-every", log_every, "Progress line every N episodes (0 = quiet)");

  std::string checkpoint;
  std::optional<std::uint64_t> eval_seed;
  bool traces = false;
  auto* eval = app.add_subcommand("eval", "Greedy evaluation of a checkpoint under dynamic obstacles");
  eval->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint written by train")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out_dir, "Output directory (default: config output_dir)");
  eval->add_option("--seed", eval_seed, "Evaluation seed (default: first config seed)");
  eval->add_flag("--traces", traces, "Also write trajectory.jsonl and channel_trace.csv");
  eval->add_option("--log-every", log_every, "Progress line every N episodes (0 = quiet)");

  std::string workdir;
  auto* selftest = app.add_subcommand("selftest", "Run the invariant and oracle checks");
  selftest->add_option("--seed", seed, "Seed for randomized checks");
  selftest->add_option("--workdir", workdir, "Scratch directory for the determinism check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return run_train(config_path, train_seed, out_dir, log_every);
    if (*eval) return run_eval(config_path, checkpoint, eval_seed, out_dir, traces, log_every);
    if (*selftest) return run_selftest(seed, workdir);
  } catch (const semcomm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
