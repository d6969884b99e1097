#include "semcomm/wireless.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semcomm/error.hpp"

namespace semcomm::wireless {
namespace {

void require_pair_schedule(int n_agents, int n_subchannels) {
  if (n_subchannels != 2) {
    throw Error(ErrorCode::precondition, "schedulers enumerate exactly two subchannels");
  }
  if (n_agents < 2) throw Error(ErrorCode::precondition, "scheduling needs at least two agents");
}

}  // namespace

ChannelState sample_channel(int n_agents, int n_subchannels, Rng& rng, int step) {
  if (n_agents < 1 || n_subchannels < 1) {
    throw Error(ErrorCode::precondition, "channel dimensions must be >= 1");
  }
  ChannelState channel{Eigen::MatrixXd(n_agents, n_subchannels), step};
  for (int a = 0; a < n_agents; ++a) {
    for (int k = 0; k < n_subchannels; ++k) {
      // h = (x + iy) / sqrt(2) with x, y ~ N(0, 1); gain = |h|^2.
      const auto [x, y] = rng.normal_pair();
      channel.gains(a, k) = 0.5 * (x * x + y * y);
    }
  }
  return channel;
}

double achievable_rate(double gain, double tx_power_w, double noise_power_w, double bandwidth_hz) {
  if (!(noise_power_w > 0.0)) throw Error(ErrorCode::domain, "noise power must be positive");
  if (!(bandwidth_hz > 0.0)) throw Error(ErrorCode::domain, "bandwidth must be positive");
  if (!(gain >= 0.0) || !(tx_power_w >= 0.0)) {
    throw Error(ErrorCode::domain, "gain and transmit power must be non-negative");
  }
  return bandwidth_hz * std::log2(1.0 + tx_power_w * gain / noise_power_w);
}

double achievable_rate(double gain, const LinkBudget& link) {
  return achievable_rate(gain, link.tx_power_w, link.noise_power_w, link.bandwidth_hz);
}

std::optional<double> transmission_time(double payload_bits, double rate_bps, double deadline_s) {
  if (!(payload_bits > 0.0)) throw Error(ErrorCode::precondition, "payload must be positive");
  if (!(rate_bps > 0.0)) return std::nullopt;
  const double time = payload_bits / rate_bps;
  if (time > deadline_s) return std::nullopt;
  return time;
}

int schedule_action_count(int n_agents) { return n_agents * (n_agents - 1); }

ScheduleAction decode_schedule_action(int index, int n_agents) {
  if (n_agents < 2 || index < 0 || index >= schedule_action_count(n_agents)) {
    throw Error(ErrorCode::out_of_range, "schedule index " + std::to_string(index) +
                                             " outside [0, " +
                                             std::to_string(std::max(0, schedule_action_count(n_agents))) + ")");
  }
  const int first = index / (n_agents - 1);
  const int rest = index % (n_agents - 1);
  const int second = rest < first ? rest : rest + 1;
  return ScheduleAction{{first, second}};
}

int encode_schedule_action(const ScheduleAction& action, int n_agents) {
  if (!is_valid(action, n_agents, 2)) throw Error(ErrorCode::out_of_range, "invalid schedule action");
  const int first = action.assignment[0];
  const int second = action.assignment[1];
  return first * (n_agents - 1) + (second < first ? second : second - 1);
}

bool is_valid(const ScheduleAction& action, int n_agents, int n_subchannels) {
  if (static_cast<int>(action.assignment.size()) != n_subchannels) return false;
  for (std::size_t k = 0; k < action.assignment.size(); ++k) {
    const int agent = action.assignment[k];
    if (agent < 0 || agent >= n_agents) return false;
    for (std::size_t j = 0; j < k; ++j) {
      if (action.assignment[j] == agent) return false;
    }
  }
  return true;
}

ScheduleAction schedule_random(const ChannelState& channel, Rng& rng) {
  require_pair_schedule(channel.n_agents(), channel.n_subchannels());
  const auto count = static_cast<std::size_t>(schedule_action_count(channel.n_agents()));
  return decode_schedule_action(static_cast<int>(rng.index(count)), channel.n_agents());
}

ScheduleAction schedule_max_rate(const ChannelState& channel, const LinkBudget& link) {
  const int n = channel.n_agents();
  require_pair_schedule(n, channel.n_subchannels());
  int best_index = 0;
  double best_rate = -1.0;
  for (int index = 0; index < schedule_action_count(n); ++index) {
    const ScheduleAction action = decode_schedule_action(index, n);
    const double sum = achievable_rate(channel.gains(action.assignment[0], 0), link) +
                       achievable_rate(channel.gains(action.assignment[1], 1), link);
    if (sum > best_rate) {
      best_rate = sum;
      best_index = index;
    }
  }
  return decode_schedule_action(best_index, n);
}

TransmissionReport apply_schedule(const ScheduleAction& action, const ChannelState& channel,
                                  double payload_bits, const LinkBudget& link, double deadline_s) {
  if (!is_valid(action, channel.n_agents(), channel.n_subchannels())) {
    throw Error(ErrorCode::precondition, "schedule action does not fit the channel shape");
  }
  TransmissionReport report;
  report.scheduled = action.assignment;
  for (int k = 0; k < channel.n_subchannels(); ++k) {
    const int agent = action.assignment[static_cast<std::size_t>(k)];
    const double rate = achievable_rate(channel.gains(agent, k), link);
    const auto time = transmission_time(payload_bits, rate, deadline_s);
    report.rate_bps.push_back(rate);
    report.link_time.push_back(time);
    if (time) {
      report.delivered.push_back(agent);
      report.step_comm_time = std::max(report.step_comm_time, *time);
    }
  }
  std::sort(report.delivered.begin(), report.delivered.end());
  return report;
}

}  // namespace semcomm::wireless
