#include "semcomm/checks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "semcomm/aoi.hpp"
#include "semcomm/dqn.hpp"
#include "semcomm/error.hpp"
#include "semcomm/experiment.hpp"
#include "semcomm/grid_world.hpp"
#include "semcomm/qmix.hpp"
#include "semcomm/replay_buffer.hpp"
#include "semcomm/wireless.hpp"

namespace semcomm::checks {
namespace {

constexpr double kMonotoneTolerance = -1e-9;
constexpr double kMonotoneStep = 1e-3;
constexpr double kGradientTolerance = 1e-4;
constexpr double kGradientStep = 1e-6;
constexpr double kGainMeanTolerance = 0.01;
constexpr double kKsCoefficient = 1.628;  // asymptotic KS critical value at alpha = 0.01
constexpr double kRateTieTolerance = 1e-12;

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(6);
  out << x;
  return out.str();
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * rng.uniform(-1.0, 1.0);
  }
  return m;
}

// ---- DQN oracle -----------------------------------------------------------

constexpr int kOracleSide = 5;

Eigen::VectorXd oracle_input(const GridState& s) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * kOracleSide * kOracleSide);
  const Cell a = s.agent_pos[0];
  x[a.row * kOracleSide + a.col] = 1.0;
  if (s.prey_pos[0]) {
    const Cell p = *s.prey_pos[0];
    x[kOracleSide * kOracleSide + p.row * kOracleSide + p.col] = 1.0;
  }
  return x;
}

GridConfig oracle_grid() {
  GridConfig g;
  g.width = kOracleSide;
  g.height = kOracleSide;
  g.n_agents = 1;
  g.n_preys = 1;
  g.fov = 3;
  g.obstacle_mode = ObstacleMode::fixed_regular;
  g.obstacle_density = 0.0;
  g.max_steps = 30;
  g.prey_policy = PreyPolicy::stationary;
  return g;
}

// Number of starts on which the greedy policy needs exactly the BFS distance.
int oracle_optimal_starts(const nn::ParameterVector& q, const GridConfig& grid,
                          std::uint64_t seed, int starts) {
  int optimal = 0;
  for (int k = 0; k < starts; ++k) {
    GridWorld env(grid);
    const GridState& s0 = env.reset(mix_seed(seed, static_cast<std::uint64_t>(k)));
    const int shortest = *shortest_path_length(s0.obstacles, s0.agent_pos[0], *s0.prey_pos[0]);
    int steps = 0;
    bool captured = false;
    while (!env.done()) {
      const Eigen::VectorXd values = nn::predict(q, oracle_input(env.state())).col(0);
      const Action action = static_cast<Action>(learn::argmax(values));
      const StepResult r = env.step(std::span<const Action>(&action, 1));
      ++steps;
      captured = r.next_state.captured_count == 1;
    }
    if (captured && steps == shortest) ++optimal;
  }
  return optimal;
}

// ---- gradient checks ------------------------------------------------------

double relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  const double denom = analytic.norm() + numeric.norm();
  if (denom == 0.0) return 0.0;
  return (analytic - numeric).norm() / denom;
}

// L = sum(c .* f(x)); checks parameter and input gradients.
double mlp_gradient_error(const nn::ParameterVector& params, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& c) {
  auto loss = [&](const nn::ParameterVector& p, const Eigen::MatrixXd& in) {
    return c.cwiseProduct(nn::predict(p, in)).sum();
  };
  const nn::ForwardCache cache = nn::forward(params, x);
  Eigen::VectorXd grad;
  const Eigen::MatrixXd d_input = nn::backward(params, cache, c, grad);

  nn::ParameterVector probe = params;
  Eigen::VectorXd numeric(params.size());
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double orig = probe.values[i];
    probe.values[i] = orig + kGradientStep;
    const double up = loss(probe, x);
    probe.values[i] = orig - kGradientStep;
    const double down = loss(probe, x);
    probe.values[i] = orig;
    numeric[i] = (up - down) / (2.0 * kGradientStep);
  }
  Eigen::MatrixXd xp = x;
  Eigen::VectorXd numeric_input(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = xp.data()[i];
    xp.data()[i] = orig + kGradientStep;
    const double up = loss(params, xp);
    xp.data()[i] = orig - kGradientStep;
    const double down = loss(params, xp);
    xp.data()[i] = orig;
    numeric_input[i] = (up - down) / (2.0 * kGradientStep);
  }
  const Eigen::VectorXd analytic_input = Eigen::Map<const Eigen::VectorXd>(d_input.data(), d_input.size());
  return std::max(relative_error(grad, numeric), relative_error(analytic_input, numeric_input));
}

learn::QmixBatch random_qmix_batch(const learn::QmixDims& dims, int b, Rng& rng) {
  learn::QmixBatch batch;
  batch.n_agents = dims.n_agents;
  const Eigen::Index cols = static_cast<Eigen::Index>(b) * dims.n_agents;
  batch.observations = random_matrix(dims.observation_dim, cols, rng);
  batch.received = random_matrix(dims.received_dim(), cols, rng);
  batch.states = random_matrix(dims.state_dim, b, rng);
  batch.rewards = Eigen::VectorXd::Zero(b);
  for (Eigen::Index i = 0; i < cols; ++i) {
    batch.actions.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(dims.n_actions))));
  }
  batch.done.assign(static_cast<std::size_t>(b), 0);
  return batch;
}

// End-to-end encoder -> agent Q -> mixing loss with fixed targets.
double qmix_gradient_error(std::uint64_t seed, nn::Activation agent_activation) {
  Rng rng(seed);
  learn::QmixDims dims;
  dims.n_agents = 2 + static_cast<int>(rng.index(2));
  dims.observation_dim = 6;
  dims.feature_dim = 3;
  dims.n_actions = 3;
  dims.state_dim = 5;
  learn::QmixShape shape;
  shape.encoder_hidden = 4;
  shape.agent_hidden = {5};
  shape.hyper_hidden = 4;
  shape.mixing_embed = 3;
  learn::QmixNetworks nets = learn::make_qmix_networks(dims, shape, rng);
  for (auto& layer : nets.agent_q.manifest) {
    if (&layer != &nets.agent_q.manifest.back()) layer.activation = agent_activation;
  }
  for (auto* group : nets.groups()) {
    for (Eigen::Index i = 0; i < group->size(); ++i) group->values[i] += 0.1 * rng.uniform(-1.0, 1.0);
  }
  const int b = 3;
  const learn::QmixBatch batch = random_qmix_batch(dims, b, rng);
  const Eigen::VectorXd targets = random_matrix(b, 1, rng).col(0);
  const double l2 = 0.05;

  const learn::QmixLoss analytic = learn::qmix_loss_gradient(nets, targets, batch, l2);
  double worst = 0.0;
  for (int k = 0; k < learn::QmixNetworks::kGroups; ++k) {
    nn::ParameterVector& group = *nets.groups()[static_cast<std::size_t>(k)];
    Eigen::VectorXd numeric(group.size());
    for (Eigen::Index i = 0; i < group.size(); ++i) {
      const double orig = group.values[i];
      group.values[i] = orig + kGradientStep;
      const double up = learn::qmix_loss_gradient(nets, targets, batch, l2).total_loss;
      group.values[i] = orig - kGradientStep;
      const double down = learn::qmix_loss_gradient(nets, targets, batch, l2).total_loss;
      group.values[i] = orig;
      numeric[i] = (up - down) / (2.0 * kGradientStep);
    }
    worst = std::max(worst, relative_error(analytic.gradients[static_cast<std::size_t>(k)], numeric));
  }
  return worst;
}

// ---- channel ----------------------------------------------------------------

double reference_rate(double gain, const wireless::LinkBudget& link) {
  return link.bandwidth_hz * std::log2(1.0 + link.tx_power_w * gain / link.noise_power_w);
}

// ---- files ------------------------------------------------------------------

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

CheckResult dqn_oracle(std::uint64_t seed, int max_episodes, int starts) {
  CheckResult result{"dqn_oracle", false, ""};
  const GridConfig grid = oracle_grid();
  Rng rng(mix_seed(seed, 1));
  const int n_inputs = 2 * kOracleSide * kOracleSide;
  const std::vector<int> hidden{64, 64};
  nn::ParameterVector online =
      nn::initialize(nn::make_mlp(n_inputs, hidden, kNumActions, nn::Activation::relu), rng);
  nn::ParameterVector target = online;
  nn::OptimizerState opt;
  learn::UpdateConfig update;
  update.gamma = 0.9;
  update.optimizer.learning_rate = 1e-3;
  update.grad_clip = 10.0;
  const learn::TargetSync sync{learn::SyncMode::hard, 200, 0.0};
  const int batch_size = 32;
  const int anneal_episodes = 1500;
  const int eval_every = 250;

  ReplayBuffer<learn::DqnSample> replay(20000);
  std::int64_t updates = 0;
  const std::uint64_t eval_seed = mix_seed(seed, 2);
  int best = 0;
  for (int episode = 1; episode <= max_episodes; ++episode) {
    const double epsilon =
        std::max(0.05, 1.0 - 0.95 * static_cast<double>(episode) / anneal_episodes);
    GridWorld env(grid);
    env.reset(mix_seed(mix_seed(seed, 3), static_cast<std::uint64_t>(episode)));
    while (!env.done()) {
      learn::DqnSample sample;
      sample.observation = oracle_input(env.state());
      sample.action = learn::epsilon_greedy(nn::predict(online, sample.observation).col(0), epsilon, rng);
      const Action action = static_cast<Action>(sample.action);
      const StepResult r = env.step(std::span<const Action>(&action, 1));
      sample.reward = r.reward;
      sample.next_observation = oracle_input(r.next_state);
      // Running out of steps is a time limit, not a terminal state.
      sample.done = r.next_state.captured_count == 1;
      replay.push(std::move(sample));
      if (replay.size() >= static_cast<std::size_t>(batch_size)) {
        const auto batch = replay.sample(static_cast<std::size_t>(batch_size), rng);
        learn::dqn_update(online, target, batch, opt, update);
        learn::target_sync(online, target, sync, ++updates);
      }
    }
    if (episode % eval_every == 0) {
      best = oracle_optimal_starts(online, grid, eval_seed, starts);
      if (best == starts) {
        result.passed = true;
        result.detail = "optimal on " + std::to_string(best) + "/" + std::to_string(starts) +
                        " starts after " + std::to_string(episode) + " episodes";
        return result;
      }
    }
  }
  result.detail = "optimal on " + std::to_string(best) + "/" + std::to_string(starts) +
                  " starts after " + std::to_string(max_episodes) + " episodes";
  return result;
}

CheckResult qmix_monotonicity(std::uint64_t seed, int triples, int instances) {
  CheckResult result{"qmix_monotonicity", true, ""};
  Rng rng(mix_seed(seed, 4));
  learn::QmixDims dims;
  dims.state_dim = 24;
  const learn::QmixShape shape;
  double min_derivative = std::numeric_limits<double>::infinity();
  for (int t = 0; t < triples; ++t) {
    const learn::QmixNetworks nets = learn::make_qmix_networks(dims, shape, rng);
    const Eigen::VectorXd state = random_matrix(dims.state_dim, 1, rng, 3.0).col(0);
    const Eigen::VectorXd q = random_matrix(dims.n_agents, 1, rng, 10.0).col(0);
    const learn::MixerWeights w = learn::mixer_weights(nets, state);
    for (int i = 0; i < dims.n_agents; ++i) {
      Eigen::VectorXd up = q;
      Eigen::VectorXd down = q;
      up[i] += kMonotoneStep;
      down[i] -= kMonotoneStep;
      const double d = (learn::mix(w, up) - learn::mix(w, down)) / (2.0 * kMonotoneStep);
      min_derivative = std::min(min_derivative, d);
    }
  }
  if (min_derivative < kMonotoneTolerance) result.passed = false;

  int argmax_failures = 0;
  const int n = dims.n_agents;
  const int a = kNumActions;
  for (int t = 0; t < instances; ++t) {
    const learn::QmixNetworks nets = learn::make_qmix_networks(dims, shape, rng);
    const Eigen::VectorXd state = random_matrix(dims.state_dim, 1, rng, 3.0).col(0);
    const Eigen::MatrixXd table = random_matrix(a, n, rng, 10.0);  // per-agent Q, one column per agent
    const learn::MixerWeights w = learn::mixer_weights(nets, state);
    double best = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd q(n);
    int joint_count = 1;
    for (int i = 0; i < n; ++i) joint_count *= a;
    for (int joint = 0; joint < joint_count; ++joint) {
      int rest = joint;
      for (int i = 0; i < n; ++i) {
        q[i] = table(rest % a, i);
        rest /= a;
      }
      best = std::max(best, learn::mix(w, q));
    }
    for (int i = 0; i < n; ++i) q[i] = table(learn::argmax(table.col(i)), i);
    if (learn::mix(w, q) < best) ++argmax_failures;
  }
  if (argmax_failures > 0) result.passed = false;
  result.detail = "min dq_tot/dq_i = " + fmt(min_derivative) + " over " + std::to_string(triples) +
                  " triples; argmax mismatches " + std::to_string(argmax_failures) + "/" +
                  std::to_string(instances);
  return result;
}

CheckResult gradient_correctness(std::uint64_t seed, int networks) {
  CheckResult result{"gradient_correctness", true, ""};
  Rng rng(mix_seed(seed, 5));
  constexpr std::array kActivations{nn::Activation::relu, nn::Activation::elu,
                                    nn::Activation::identity, nn::Activation::abs};
  const int end_to_end = std::max(1, networks / 5);
  double worst_mlp = 0.0;
  double worst_e2e = 0.0;
  for (int k = 0; k < networks - end_to_end; ++k) {
    const int depth = 1 + static_cast<int>(rng.index(3));
    nn::Architecture layers;
    int in = 1 + static_cast<int>(rng.index(6));
    for (int l = 0; l < depth; ++l) {
      const int out = 1 + static_cast<int>(rng.index(6));
      // Cycle so that every activation appears in hidden and output positions.
      const auto act = kActivations[static_cast<std::size_t>((k + l) % kActivations.size())];
      layers.push_back({in, out, act});
      in = out;
    }
    nn::ParameterVector params = nn::initialize(layers, rng);
    for (Eigen::Index i = 0; i < params.size(); ++i) params.values[i] += 0.1 * rng.uniform(-1.0, 1.0);
    const int batch = 1 + static_cast<int>(rng.index(3));
    const Eigen::MatrixXd x = random_matrix(layers.front().in_dim, batch, rng, 2.0);
    const Eigen::MatrixXd c = random_matrix(layers.back().out_dim, batch, rng);
    worst_mlp = std::max(worst_mlp, mlp_gradient_error(params, x, c));
  }
  for (int k = 0; k < end_to_end; ++k) {
    const auto act = kActivations[static_cast<std::size_t>(k % kActivations.size())];
    worst_e2e = std::max(worst_e2e, qmix_gradient_error(mix_seed(seed, 100 + static_cast<std::uint64_t>(k)), act));
  }
  result.passed = worst_mlp < kGradientTolerance && worst_e2e < kGradientTolerance;
  result.detail = "max relative error " + fmt(worst_mlp) + " over " +
                  std::to_string(networks - end_to_end) + " MLPs, " + fmt(worst_e2e) + " over " +
                  std::to_string(end_to_end) + " encoder->Q->mixer stacks";
  return result;
}

CheckResult channel_statistics(std::uint64_t seed, int samples, int states) {
  CheckResult result{"channel_statistics", true, ""};
  Rng rng(mix_seed(seed, 6));
  std::vector<double> gains;
  gains.reserve(static_cast<std::size_t>(samples));
  const int per_draw = 1000;
  while (static_cast<int>(gains.size()) < samples) {
    const int rows = std::min(per_draw, samples - static_cast<int>(gains.size()));
    const wireless::ChannelState ch = wireless::sample_channel(rows, 1, rng);
    for (int i = 0; i < rows; ++i) gains.push_back(ch.gains(i, 0));
  }
  double sum = 0.0;
  for (const double g : gains) sum += g;
  const double mean = sum / static_cast<double>(samples);
  std::sort(gains.begin(), gains.end());
  double ks = 0.0;
  const double n = static_cast<double>(samples);
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const double cdf = 1.0 - std::exp(-gains[i]);
    ks = std::max({ks, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  const double critical = kKsCoefficient / std::sqrt(n);
  if (std::abs(mean - 1.0) > kGainMeanTolerance || ks >= critical) result.passed = false;

  const wireless::LinkBudget link;
  int mismatches = 0;
  for (int t = 0; t < states; ++t) {
    const int agents = 2 + static_cast<int>(rng.index(5));
    const wireless::ChannelState ch = wireless::sample_channel(agents, 2, rng);
    double brute = -1.0;
    for (int a1 = 0; a1 < agents; ++a1) {
      for (int a2 = 0; a2 < agents; ++a2) {
        if (a1 == a2) continue;
        brute = std::max(brute, reference_rate(ch.gains(a1, 0), link) + reference_rate(ch.gains(a2, 1), link));
      }
    }
    const wireless::ScheduleAction chosen = wireless::schedule_max_rate(ch, link);
    const double got = reference_rate(ch.gains(chosen.assignment[0], 0), link) +
                       reference_rate(ch.gains(chosen.assignment[1], 1), link);
    if (chosen.assignment[0] == chosen.assignment[1] || got < brute * (1.0 - kRateTieTolerance)) ++mismatches;
  }
  if (mismatches > 0) result.passed = false;
  result.detail = "mean " + fmt(mean) + ", KS D " + fmt(ks) + " (critical " + fmt(critical) +
                  "), max-rate mismatches " + std::to_string(mismatches) + "/" + std::to_string(states);
  return result;
}

CheckResult aoi_suite(std::uint64_t seed, int schedules) {
  CheckResult result{"aoi_suite", true, ""};
  Rng rng(mix_seed(seed, 7));
  int failures = 0;
  std::int64_t stale_seen = 0;
  std::int64_t deliveries = 0;
  for (int s = 0; s < schedules && failures == 0; ++s) {
    const int n = 1 + static_cast<int>(rng.index(6));
    const int horizon = 1 + static_cast<int>(rng.index(60));
    AoiTable table(n);
    std::vector<std::optional<std::int64_t>> last(static_cast<std::size_t>(n));
    auto expected = [&](int sender, std::int64_t now) {
      const auto& l = last[static_cast<std::size_t>(sender)];
      return l ? now - *l : now;
    };
    for (std::int64_t now = 1; now <= horizon && failures == 0; ++now) {
      const AoiTable before = table;
      table.advance();
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          const std::int64_t want = r == c ? 0 : before.age(r, c) + 1;
          if (table.age(r, c) != want) ++failures;
        }
      }
      const int events = static_cast<int>(rng.index(static_cast<std::size_t>(n) + 1));
      for (int e = 0; e < events; ++e) {
        const int sender = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
        const std::int64_t lag = static_cast<std::int64_t>(rng.index(std::min<std::size_t>(static_cast<std::size_t>(now) + 1, 8)));
        const std::int64_t gen = now - lag;
        const AoiTable pre = table;
        const DeliveryStatus status = table.record_delivery(sender, gen, now);
        ++deliveries;
        auto& l = last[static_cast<std::size_t>(sender)];
        if (l && gen < *l) {
          ++stale_seen;
          if (status != DeliveryStatus::stale_ignored || !(table == pre)) ++failures;
        } else {
          l = gen;
          if (status != DeliveryStatus::recorded) ++failures;
        }
      }
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          const std::int64_t want = r == c ? 0 : expected(c, now);
          if (table.age(r, c) != want) ++failures;
        }
      }
    }
  }
  result.passed = failures == 0 && stale_seen > 0;
  result.detail = std::to_string(failures) + " violations over " + std::to_string(schedules) +
                  " schedules (" + std::to_string(deliveries) + " deliveries, " +
                  std::to_string(stale_seen) + " stale)";
  return result;
}

CheckResult training_determinism(const ExperimentConfig& config, std::uint64_t seed,
                                 const std::filesystem::path& workdir) {
  CheckResult result{"training_determinism", false, ""};
  const auto a = run_train(config, seed, workdir / "run_a");
  const auto b = run_train(config, seed, workdir / "run_b");
  const bool csv_same = slurp(a.metrics_csv) == slurp(b.metrics_csv);
  const bool ckpt_same = slurp(a.checkpoint) == slurp(b.checkpoint);
  result.passed = csv_same && ckpt_same;
  result.detail = std::string("metrics CSV ") + (csv_same ? "identical" : "differs") + ", checkpoint " +
                  (ckpt_same ? "identical" : "differs") + " after " +
                  std::to_string(config.n_train_episodes) + " episodes (" +
                  std::to_string(a.team_updates) + " team updates)";
  return result;
}

ExperimentConfig quick_config() {
  ExperimentConfig config;
  config.grid.max_steps = 40;
  config.learner.batch_size = 16;
  config.learner.train_interval = 4;
  config.learner.target_sync_period = 20;
  config.n_train_episodes = 8;
  config.n_eval_episodes = 4;
  config.checkpoint_interval = 4;
  return config;
}

}  // namespace semcomm::checks
