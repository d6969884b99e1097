#pragma once

#include <iosfwd>
#include <string>

#include "semcomm/wireless.hpp"

namespace semcomm {

/// Fixed metrics CSV column order.
inline constexpr const char* kMetricsHeader =
    "episode,success,episode_total_time,captures,steps,mean_aoi,peak_aoi,td_loss_team,td_loss_ap,epsilon";

inline constexpr const char* kChannelTraceHeader = "step,agent,subchannel,gain,rate,time,delivered";

/// %.9g formatting used for every floating-point CSV field.
std::string format_float(double value);

/// One row per (agent, subchannel) link for this step. `time` is the
/// would-be transmission time of the payload on that link, or `timeout`;
/// `delivered` is 1 only for scheduled links that met the deadline.
void write_channel_trace(std::ostream& out, const wireless::ChannelState& channel,
                         const wireless::ScheduleAction& action, double payload_bits,
                         const wireless::LinkBudget& link, double deadline_s);

}  // namespace semcomm
