#include "semcomm/traces.hpp"

#include <cstdio>
#include <ostream>

namespace semcomm {

std::string format_float(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  return buffer;
}

void write_channel_trace(std::ostream& out, const wireless::ChannelState& channel,
                         const wireless::ScheduleAction& action, double payload_bits,
                         const wireless::LinkBudget& link, double deadline_s) {
  for (int agent = 0; agent < channel.n_agents(); ++agent) {
    for (int k = 0; k < channel.n_subchannels(); ++k) {
      const double gain = channel.gains(agent, k);
      const double rate = wireless::achievable_rate(gain, link);
      const auto time = wireless::transmission_time(payload_bits, rate, deadline_s);
      const bool scheduled = action.assignment[static_cast<std::size_t>(k)] == agent;
      out << channel.step << ',' << agent << ',' << k << ',' << format_float(gain) << ','
          << format_float(rate) << ',' << (time ? format_float(*time) : std::string("timeout")) << ','
          << (scheduled && time ? 1 : 0) << '\n';
    }
  }
}

}  // namespace semcomm
