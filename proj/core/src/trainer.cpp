#include "semcomm/trainer.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>

#include "semcomm/error.hpp"
#include "semcomm/serialize.hpp"
#include "semcomm/traces.hpp"

namespace semcomm {
namespace {

constexpr std::uint64_t kInitStream = 10;
constexpr std::uint64_t kPolicyStream = 11;
constexpr std::uint64_t kChannelStream = 12;
constexpr std::uint64_t kReplayStream = 13;
constexpr std::uint64_t kTrainEpisodeStream = 20;
constexpr std::uint64_t kEvalEpisodeStream = 21;

constexpr char kCheckpointMagic[8] = {'S', 'E', 'M', 'C', 'O', 'M', 'M', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

learn::QmixShape team_shape(const ExperimentConfig& c) {
  learn::QmixShape shape;
  shape.encoder_hidden = c.codec.encoder_hidden;
  shape.agent_hidden = c.learner.agent_hidden;
  shape.hyper_hidden = c.learner.hyper_hidden;
  shape.mixing_embed = c.learner.mixing_embed;
  return shape;
}

void write_vector_checked(std::ostream& out, const nn::ParameterVector& v) { nn::write(out, v); }

void read_vector_checked(std::istream& in, nn::ParameterVector& into, const char* what) {
  nn::ParameterVector loaded = nn::read(in);
  if (loaded.manifest != into.manifest) {
    throw Error(ErrorCode::checkpoint_mismatch, std::string(what) + " shape differs from config");
  }
  into = std::move(loaded);
}

void read_optimizer_checked(std::istream& in, nn::OptimizerState& into, Eigen::Index size) {
  nn::OptimizerState loaded = nn::read_optimizer_state(in);
  if (loaded.first_moment.size() != 0 && loaded.first_moment.size() != size) {
    throw Error(ErrorCode::checkpoint_mismatch, "optimizer state size differs from config");
  }
  into = std::move(loaded);
}

}  // namespace

void GlobalState::write_into(Eigen::Ref<Eigen::VectorXd> out) const {
  const auto n = static_cast<Eigen::Index>(occupancy.size());
  for (Eigen::Index i = 0; i < n; ++i) out[i] = occupancy[static_cast<std::size_t>(i)];
  out.segment(n, gains.size()) = gains;
}

Trainer::Trainer(ExperimentConfig config, std::uint64_t seed)
    : config_((config.validate(), std::move(config))),
      seed_(seed),
      env_(config_.grid),
      replay_(config_.learner.buffer_capacity),
      policy_rng_(mix_seed(seed, kPolicyStream)),
      channel_rng_(mix_seed(seed, kChannelStream)),
      replay_rng_(mix_seed(seed, kReplayStream)) {
  Rng init(mix_seed(seed, kInitStream));
  team_ = learn::make_qmix_networks(team_dims(), team_shape(config_), init);
  team_target_ = team_;
  const int ap_actions = wireless::schedule_action_count(config_.grid.n_agents);
  ap_ = nn::initialize(nn::make_mlp(ap_observation_dim(), config_.learner.ap_hidden, ap_actions,
                                    nn::Activation::elu),
                       init);
  ap_target_ = ap_;
}

learn::QmixDims Trainer::team_dims() const {
  learn::QmixDims dims;
  dims.n_agents = config_.grid.n_agents;
  dims.observation_dim = config_.observation_dim();
  dims.feature_dim = config_.codec.feature_dim;
  dims.n_actions = kNumActions;
  dims.state_dim = 3 * config_.grid.width * config_.grid.height +
                   config_.grid.n_agents * config_.wireless.n_subchannels;
  return dims;
}

int Trainer::ap_observation_dim() const {
  return config_.grid.n_agents * config_.wireless.n_subchannels + config_.grid.n_agents;
}

double Trainer::epsilon_for(int episode) const {
  const auto& l = config_.learner;
  const double anneal = l.epsilon_anneal_fraction * config_.n_train_episodes;
  if (anneal <= 0.0) return l.epsilon_end;
  const double progress = static_cast<double>(episode) / anneal;
  if (progress >= 1.0) return l.epsilon_end;
  return l.epsilon_start + (l.epsilon_end - l.epsilon_start) * progress;
}

EpisodeMetrics Trainer::train_episode(int episode) {
  EpisodeOptions options;
  options.episode = episode;
  options.learn = true;
  options.epsilon = epsilon_for(episode);
  options.mode = config_.grid.obstacle_mode;
  options.env_seed = mix_seed(mix_seed(seed_, kTrainEpisodeStream), static_cast<std::uint64_t>(episode));
  return run_episode(options);
}

EpisodeMetrics Trainer::eval_episode(int episode) {
  EpisodeOptions options;
  options.episode = episode;
  options.learn = false;
  options.epsilon = 0.0;
  options.mode = config_.eval_obstacle_mode;
  options.env_seed = mix_seed(mix_seed(seed_, kEvalEpisodeStream), static_cast<std::uint64_t>(episode));
  return run_episode(options);
}

GlobalState Trainer::global_state(const GridState& state, const wireless::ChannelState& channel) const {
  GlobalState gs;
  gs.occupancy = occupancy_planes(state);
  gs.gains.resize(channel.gains.size());
  for (int a = 0; a < channel.n_agents(); ++a) {
    for (int k = 0; k < channel.n_subchannels(); ++k) {
      gs.gains[a * channel.n_subchannels() + k] = channel.gains(a, k);
    }
  }
  return gs;
}

EpisodeMetrics Trainer::run_episode(const EpisodeOptions& options) {
  const GridConfig& grid = config_.grid;
  const int n = grid.n_agents;
  const int feature_dim = config_.codec.feature_dim;
  const int obs_dim = config_.observation_dim();
  const int recv_dim = codec::received_dim(feature_dim, n);
  const double payload = config_.payload_bits();
  const auto& link = config_.wireless.link;
  const auto& l = config_.learner;

  env_.reset(options.env_seed, options.mode);
  AoiTable aoi(n);
  codec::FeatureCache cache(n);
  std::vector<AoiTable> history;
  history.reserve(static_cast<std::size_t>(grid.max_steps));
  std::optional<Transition> pending;

  EpisodeMetrics metrics;
  metrics.episode = options.episode;
  metrics.epsilon = options.epsilon;
  double team_loss = 0.0, ap_loss = 0.0;
  int team_loss_count = 0, ap_loss_count = 0;

  Eigen::MatrixXd obs_matrix(obs_dim, n);
  Eigen::MatrixXd received(recv_dim, n);
  Eigen::VectorXd importance(n);
  Eigen::VectorXd ap_obs(ap_observation_dim());
  std::vector<Action> actions(static_cast<std::size_t>(n));
  std::vector<int> action_ids(static_cast<std::size_t>(n));

  while (!env_.done()) {
    const int t = env_.state().step;

    // Sense: local observations -> semantic features.
    std::vector<AgentObservation> obs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      obs[static_cast<std::size_t>(i)] = env_.observe(i);
      obs[static_cast<std::size_t>(i)].flatten_into(obs_matrix.col(i));
    }
    const Eigen::MatrixXd features = codec::encode_batch(obs_matrix, team_.encoder);
    std::vector<codec::SemanticFeature> current(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      auto& f = current[static_cast<std::size_t>(i)];
      f.vector = features.col(i);
      f.gen_step = t;
      f.sender = i;
      const auto& last = cache.last_delivered[static_cast<std::size_t>(i)];
      f.importance = codec::importance_score(f, last ? &*last : nullptr);
      importance[i] = f.importance;
    }

    // Transmit: the access point assigns the two uplink subchannels.
    const wireless::ChannelState channel =
        wireless::sample_channel(n, config_.wireless.n_subchannels, channel_rng_, t);
    for (int a = 0; a < n; ++a) {
      for (int k = 0; k < channel.n_subchannels(); ++k) {
        ap_obs[a * channel.n_subchannels() + k] = channel.gains(a, k);
      }
    }
    ap_obs.tail(n) = importance;

    wireless::ScheduleAction schedule;
    switch (config_.scheduler_mode) {
      case SchedulerMode::learned: {
        const Eigen::VectorXd q = nn::predict(ap_, ap_obs).col(0);
        schedule = wireless::decode_schedule_action(learn::epsilon_greedy(q, options.epsilon, policy_rng_), n);
        break;
      }
      case SchedulerMode::random: schedule = wireless::schedule_random(channel, policy_rng_); break;
      case SchedulerMode::max_rate: schedule = wireless::schedule_max_rate(channel, link); break;
    }
    const wireless::TransmissionReport report =
        wireless::apply_schedule(schedule, channel, payload, link, config_.wireless.deadline_s);

    aoi.advance();
    for (const int sender : report.delivered) {
      aoi.record_delivery(sender, t, t);
      cache.last_delivered[static_cast<std::size_t>(sender)] = current[static_cast<std::size_t>(sender)];
    }
    history.push_back(aoi);

    // Execute: fuse own and received features, act.
    for (int i = 0; i < n; ++i) {
      const auto ages = aoi.ages_for(i);
      received.col(i) = codec::fuse_received(i, feature_dim, cache, ages, grid.max_steps);
    }
    const Eigen::MatrixXd q_agents =
        nn::predict(team_.agent_q, learn::agent_inputs(features, received, n));
    for (int i = 0; i < n; ++i) {
      action_ids[static_cast<std::size_t>(i)] = learn::epsilon_greedy(q_agents.col(i), options.epsilon, policy_rng_);
      actions[static_cast<std::size_t>(i)] = static_cast<Action>(action_ids[static_cast<std::size_t>(i)]);
    }

    GlobalState state_now;
    if (options.learn) {
      state_now = global_state(env_.state(), channel);
      if (pending) {
        pending->next_observations = obs;
        pending->next_received = received.cast<float>();
        pending->next_ap_observation = ap_obs;
        pending->next_state = state_now;
        replay_.push(std::move(*pending));
        pending.reset();
      }
    }

    const StepResult result = env_.step(actions);
    const double reward = result.reward - l.lambda_time * report.step_comm_time -
                          l.lambda_aoi * aoi.mean_age();
    metrics.episode_total_time += config_.wireless.step_duration_s + report.step_comm_time;

    if (sinks_.channel) {
      write_channel_trace(*sinks_.channel, channel, schedule, payload, link, config_.wireless.deadline_s);
    }
    if (sinks_.trajectory) {
      write_trajectory_record(*sinks_.trajectory, env_.state(), actions, reward, result.done);
    }

    if (options.learn) {
      Transition tr;
      tr.observations = std::move(obs);
      tr.received = received.cast<float>();
      tr.actions = action_ids;
      tr.ap_observation = ap_obs;
      tr.ap_action = wireless::encode_schedule_action(schedule, n);
      tr.reward = reward;
      tr.state = std::move(state_now);
      tr.done = result.done;
      if (result.done) {
        // Masked by done in the target; any well-shaped value will do.
        tr.next_observations = tr.observations;
        tr.next_received = tr.received;
        tr.next_ap_observation = tr.ap_observation;
        tr.next_state = tr.state;
        replay_.push(std::move(tr));
      } else {
        pending = std::move(tr);
      }

      ++steps_since_update_;
      if (steps_since_update_ >= l.train_interval &&
          replay_.size() >= static_cast<std::size_t>(l.batch_size)) {
        steps_since_update_ = 0;
        learn_step(team_loss, team_loss_count, ap_loss, ap_loss_count);
      }
    }
  }

  const GridState& final_state = env_.state();
  metrics.success = final_state.captured_count == grid.n_preys;
  metrics.captures = final_state.captured_count;
  metrics.steps = final_state.step;
  const AoiSummary summary = summarize(history);
  metrics.mean_aoi = summary.mean;
  metrics.peak_aoi = summary.peak;
  metrics.td_loss_team = team_loss_count ? team_loss / team_loss_count : 0.0;
  metrics.td_loss_ap = ap_loss_count ? ap_loss / ap_loss_count : 0.0;
  return metrics;
}

learn::QmixBatch Trainer::make_team_batch(const std::vector<const Transition*>& batch) const {
  const learn::QmixDims dims = team_dims();
  const int n = dims.n_agents;
  const auto b = static_cast<Eigen::Index>(batch.size());
  learn::QmixBatch out;
  out.n_agents = n;
  out.observations.resize(dims.observation_dim, b * n);
  out.next_observations.resize(dims.observation_dim, b * n);
  out.received.resize(dims.received_dim(), b * n);
  out.next_received.resize(dims.received_dim(), b * n);
  out.actions.resize(static_cast<std::size_t>(b * n));
  out.rewards.resize(b);
  out.states.resize(dims.state_dim, b);
  out.next_states.resize(dims.state_dim, b);
  out.done.resize(static_cast<std::size_t>(b));
  for (Eigen::Index s = 0; s < b; ++s) {
    const Transition& tr = *batch[static_cast<std::size_t>(s)];
    for (int i = 0; i < n; ++i) {
      const Eigen::Index col = s * n + i;
      tr.observations[static_cast<std::size_t>(i)].flatten_into(out.observations.col(col));
      tr.next_observations[static_cast<std::size_t>(i)].flatten_into(out.next_observations.col(col));
      out.actions[static_cast<std::size_t>(col)] = tr.actions[static_cast<std::size_t>(i)];
    }
    out.received.middleCols(s * n, n) = tr.received.cast<double>();
    out.next_received.middleCols(s * n, n) = tr.next_received.cast<double>();
    out.rewards[s] = tr.reward;
    tr.state.write_into(out.states.col(s));
    tr.next_state.write_into(out.next_states.col(s));
    out.done[static_cast<std::size_t>(s)] = tr.done ? 1 : 0;
  }
  return out;
}

void Trainer::learn_step(double& team_loss_sum, int& team_loss_count, double& ap_loss_sum,
                         int& ap_loss_count) {
  const auto& l = config_.learner;
  learn::UpdateConfig update;
  update.gamma = l.gamma;
  update.optimizer.kind = l.optimizer;
  update.optimizer.learning_rate = l.learning_rate;
  update.grad_clip = l.grad_clip;
  const learn::TargetSync sync{learn::SyncMode::hard, l.target_sync_period, 1.0};

  const auto batch = replay_.sample(static_cast<std::size_t>(l.batch_size), replay_rng_);
  const learn::QmixBatch team_batch = make_team_batch(batch);
  team_loss_sum += learn::qmix_update(team_, team_target_, team_batch, config_.codec.l2_penalty, team_opt_, update);
  ++team_loss_count;
  ++team_updates_;
  learn::target_sync(team_, team_target_, sync, team_updates_);

  if (config_.scheduler_mode != SchedulerMode::learned) return;
  std::vector<learn::DqnSample> samples(batch.size());
  std::vector<const learn::DqnSample*> views(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const Transition& tr = *batch[j];
    samples[j] = {tr.ap_observation, tr.ap_action, tr.reward, tr.next_ap_observation, tr.done};
    views[j] = &samples[j];
  }
  ap_loss_sum += learn::dqn_update(ap_, ap_target_, views, ap_opt_, update);
  ++ap_loss_count;
  ++ap_updates_;
  learn::target_sync(ap_, ap_target_, sync, ap_updates_);
}

void Trainer::save_checkpoint(std::ostream& out) const {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  io::write_u32(out, kCheckpointVersion);
  io::write_string(out, to_string(config_.scheduler_mode));
  io::write_u64(out, seed_);
  io::write_u64(out, static_cast<std::uint64_t>(team_updates_));
  io::write_u64(out, static_cast<std::uint64_t>(ap_updates_));
  io::write_u64(out, static_cast<std::uint64_t>(steps_since_update_));
  io::write_u32(out, learn::QmixNetworks::kGroups);
  for (const auto* v : team_.groups()) write_vector_checked(out, *v);
  for (const auto* v : team_target_.groups()) write_vector_checked(out, *v);
  for (const auto& s : team_opt_) nn::write(out, s);
  write_vector_checked(out, ap_);
  write_vector_checked(out, ap_target_);
  nn::write(out, ap_opt_);
  io::write_string(out, policy_rng_.state());
  io::write_string(out, channel_rng_.state());
  io::write_string(out, replay_rng_.state());
  if (!out) throw Error(ErrorCode::io_error, "failed writing checkpoint");
}

void Trainer::load_checkpoint(std::istream& in) {
  char magic[sizeof(kCheckpointMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCode::checkpoint_mismatch, "not a semcomm checkpoint");
  }
  if (io::read_u32(in) != kCheckpointVersion) {
    throw Error(ErrorCode::checkpoint_mismatch, "unsupported checkpoint version");
  }
  const std::string mode = io::read_string(in);
  if (mode != to_string(config_.scheduler_mode)) {
    throw Error(ErrorCode::checkpoint_mismatch,
                "checkpoint trained with scheduler_mode " + mode + ", config has " +
                    to_string(config_.scheduler_mode));
  }
  io::read_u64(in);  // training seed, informational
  // Parse into copies so a failed load leaves this trainer untouched.
  const auto team_updates = static_cast<std::int64_t>(io::read_u64(in));
  const auto ap_updates = static_cast<std::int64_t>(io::read_u64(in));
  const auto steps_since_update = static_cast<std::int64_t>(io::read_u64(in));
  if (io::read_u32(in) != learn::QmixNetworks::kGroups) {
    throw Error(ErrorCode::checkpoint_mismatch, "unexpected parameter group count");
  }
  learn::QmixNetworks team = team_;
  learn::QmixNetworks team_target = team_target_;
  auto team_opt = team_opt_;
  nn::ParameterVector ap = ap_;
  nn::ParameterVector ap_target = ap_target_;
  nn::OptimizerState ap_opt;
  for (auto* v : team.groups()) read_vector_checked(in, *v, "team network");
  for (auto* v : team_target.groups()) read_vector_checked(in, *v, "team target network");
  const auto groups = team.groups();
  for (std::size_t k = 0; k < team_opt.size(); ++k) read_optimizer_checked(in, team_opt[k], groups[k]->size());
  read_vector_checked(in, ap, "AP network");
  read_vector_checked(in, ap_target, "AP target network");
  read_optimizer_checked(in, ap_opt, ap.size());
  Rng policy_rng = policy_rng_;
  Rng channel_rng = channel_rng_;
  Rng replay_rng = replay_rng_;
  policy_rng.restore(io::read_string(in));
  channel_rng.restore(io::read_string(in));
  replay_rng.restore(io::read_string(in));

  team_ = std::move(team);
  team_target_ = std::move(team_target);
  team_opt_ = std::move(team_opt);
  ap_ = std::move(ap);
  ap_target_ = std::move(ap_target);
  ap_opt_ = std::move(ap_opt);
  policy_rng_ = policy_rng;
  channel_rng_ = channel_rng;
  replay_rng_ = replay_rng;
  team_updates_ = team_updates;
  ap_updates_ = ap_updates;
  steps_since_update_ = steps_since_update;
}

}  // namespace semcomm
