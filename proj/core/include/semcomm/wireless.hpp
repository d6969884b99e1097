#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "semcomm/rng.hpp"

// Uplink model: one access point, orthogonal subchannels, i.i.d. block
// Rayleigh fading per (agent, subchannel) link and step.
namespace semcomm::wireless {

struct LinkBudget {
  double tx_power_w = 1e-3;
  double noise_power_w = 1e-4;  // mean SNR 10 dB at unit gain
  double bandwidth_hz = 1e6;
};

struct WirelessConfig {
  int n_subchannels = 2;
  LinkBudget link;
  double step_duration_s = 1.0;
  double deadline_s = 1.0;
  /// Bits per transmitted scalar of a semantic feature.
  int bits_per_element = 32;
};

struct ChannelState {
  Eigen::MatrixXd gains;  // n_agents x n_subchannels, power gains >= 0
  int step = 0;

  int n_agents() const { return static_cast<int>(gains.rows()); }
  int n_subchannels() const { return static_cast<int>(gains.cols()); }
};

/// assignment[k] is the agent transmitting on subchannel k; agents distinct.
struct ScheduleAction {
  std::vector<int> assignment;

  friend bool operator==(const ScheduleAction&, const ScheduleAction&) = default;
};

struct TransmissionReport {
  std::vector<int> scheduled;                    // per subchannel
  std::vector<double> rate_bps;                  // per subchannel
  std::vector<std::optional<double>> link_time;  // per subchannel; nullopt = TIMEOUT
  std::vector<int> delivered;                    // ascending agent indices
  double step_comm_time = 0.0;
};

/// Each gain is |h|^2 with h circularly-symmetric complex Gaussian of unit
/// variance, i.e. exponential with mean 1.
ChannelState sample_channel(int n_agents, int n_subchannels, Rng& rng, int step = 0);

/// Shannon rate bandwidth * log2(1 + tx_power * gain / noise_power).
/// Throws DOMAIN on non-positive noise or bandwidth, or negative gain/power.
double achievable_rate(double gain, double tx_power_w, double noise_power_w, double bandwidth_hz);
double achievable_rate(double gain, const LinkBudget& link);

/// payload / rate when it fits within the deadline; nullopt (TIMEOUT) otherwise.
std::optional<double> transmission_time(double payload_bits, double rate_bps, double deadline_s);

int schedule_action_count(int n_agents);

/// Ordered distinct pairs in lexicographic order:
/// index = first * (n - 1) + (second < first ? second : second - 1).
ScheduleAction decode_schedule_action(int index, int n_agents);
int encode_schedule_action(const ScheduleAction& action, int n_agents);

/// True when the action assigns distinct, in-range agents to every subchannel.
bool is_valid(const ScheduleAction& action, int n_agents, int n_subchannels);

ScheduleAction schedule_random(const ChannelState& channel, Rng& rng);

/// Exhaustive argmax of summed rate over all assignments; ties go to the
/// lowest action index.
ScheduleAction schedule_max_rate(const ChannelState& channel, const LinkBudget& link = {});

TransmissionReport apply_schedule(const ScheduleAction& action, const ChannelState& channel,
                                  double payload_bits, const LinkBudget& link, double deadline_s);

}  // namespace semcomm::wireless
