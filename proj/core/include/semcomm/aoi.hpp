#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace semcomm {

enum class DeliveryStatus { recorded, stale_ignored };

/// Age of information per (receiver, sender) flow, in environment steps.
/// Deliveries are broadcast: a delivery from a sender resets that sender's
/// column for every receiver. Self-age is always zero.
class AoiTable {
 public:
  explicit AoiTable(int n_agents);

  int size() const { return n_; }
  std::int64_t age(int receiver, int sender) const;
  std::optional<std::int64_t> last_gen_step(int sender) const;
  /// Ages seen by one receiver, indexed by sender.
  std::vector<std::int64_t> ages_for(int receiver) const;

  /// One step elapses without delivery: every off-diagonal age grows by 1.
  void advance();

  /// Broadcast delivery of a packet generated at `gen_step`, received at
  /// `now`. Out-of-order packets (older than the last recorded one) leave the
  /// table unchanged. Throws PRECONDITION if gen_step > now.
  DeliveryStatus record_delivery(int sender, std::int64_t gen_step, std::int64_t now);

  /// Mean over off-diagonal entries (0 for a single agent).
  double mean_age() const;
  std::int64_t max_age() const;

  friend bool operator==(const AoiTable&, const AoiTable&) = default;

 private:
  int n_;
  std::vector<std::int64_t> age_;  // row-major receiver x sender
  std::vector<std::optional<std::int64_t>> last_gen_;
};

struct AoiSummary {
  Eigen::MatrixXd mean_per_link;  // receiver x sender
  Eigen::MatrixXd peak_per_link;
  double mean = 0.0;  // over off-diagonal links and time
  double peak = 0.0;
};

/// Throws EMPTY_HISTORY on an empty span.
AoiSummary summarize(std::span<const AoiTable> history);

}  // namespace semcomm
