#include <benchmark/benchmark.h>

#include <array>
#include <vector>

#include "semcomm/config.hpp"
#include "semcomm/grid_world.hpp"
#include "semcomm/nn.hpp"
#include "semcomm/rng.hpp"
#include "semcomm/trainer.hpp"
#include "semcomm/wireless.hpp"

namespace {

using namespace semcomm;

void BM_GridStep(benchmark::State& state) {
  GridWorld env(GridConfig{});
  Rng rng(1);
  std::uint64_t episode = 0;
  env.reset(episode);
  std::vector<Action> actions(4);
  for (auto _ : state) {
    if (env.done()) env.reset(++episode);
    for (auto& a : actions) a = static_cast<Action>(rng.index(kNumActions));
    benchmark::DoNotOptimize(env.step(actions));
  }
}
BENCHMARK(BM_GridStep);

void BM_Observe(benchmark::State& state) {
  GridWorld env(GridConfig{});
  env.reset(3);
  for (auto _ : state) {
    for (int i = 0; i < 4; ++i) benchmark::DoNotOptimize(env.observe(i));
  }
}
BENCHMARK(BM_Observe);

void BM_MlpForward(benchmark::State& state) {
  const auto batch = static_cast<Eigen::Index>(state.range(0));
  const std::array<int, 2> hidden{64, 64};
  const auto arch = nn::make_mlp(133, hidden, 5, nn::Activation::relu);
  Rng rng(2);
  const nn::ParameterVector params = nn::initialize(arch, rng);
  const Eigen::MatrixXd input = Eigen::MatrixXd::Random(133, batch);
  for (auto _ : state) benchmark::DoNotOptimize(nn::predict(params, input));
}
BENCHMARK(BM_MlpForward)->Arg(4)->Arg(256);

void BM_ScheduleMaxRate(benchmark::State& state) {
  Rng rng(4);
  const auto channel = wireless::sample_channel(4, 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(wireless::schedule_max_rate(channel));
}
BENCHMARK(BM_ScheduleMaxRate);

void BM_TrainEpisode(benchmark::State& state) {
  ExperimentConfig config;
  config.scheduler_mode = static_cast<SchedulerMode>(state.range(0));
  Trainer trainer(config, 5);
  int episode = 0;
  // Fill the replay memory so every timed episode performs updates.
  for (; episode < 4; ++episode) trainer.train_episode(episode);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.train_episode(episode++));
}
BENCHMARK(BM_TrainEpisode)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
