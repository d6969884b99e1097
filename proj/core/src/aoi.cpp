#include "semcomm/aoi.hpp"

#include <algorithm>

#include "semcomm/error.hpp"

namespace semcomm {

AoiTable::AoiTable(int n_agents)
    : n_(n_agents),
      age_(static_cast<std::size_t>(n_agents) * static_cast<std::size_t>(n_agents), 0),
      last_gen_(static_cast<std::size_t>(n_agents)) {
  if (n_agents < 1) throw Error(ErrorCode::precondition, "AoI table needs at least one agent");
}

std::int64_t AoiTable::age(int receiver, int sender) const {
  return age_[static_cast<std::size_t>(receiver * n_ + sender)];
}

std::optional<std::int64_t> AoiTable::last_gen_step(int sender) const {
  return last_gen_[static_cast<std::size_t>(sender)];
}

std::vector<std::int64_t> AoiTable::ages_for(int receiver) const {
  const auto begin = age_.begin() + receiver * n_;
  return {begin, begin + n_};
}

void AoiTable::advance() {
  for (int r = 0; r < n_; ++r) {
    for (int s = 0; s < n_; ++s) {
      if (r != s) ++age_[static_cast<std::size_t>(r * n_ + s)];
    }
  }
}

DeliveryStatus AoiTable::record_delivery(int sender, std::int64_t gen_step, std::int64_t now) {
  if (sender < 0 || sender >= n_) throw Error(ErrorCode::precondition, "sender out of range");
  if (gen_step > now) throw Error(ErrorCode::precondition, "packet generated after delivery time");
  auto& last = last_gen_[static_cast<std::size_t>(sender)];
  if (last && gen_step < *last) return DeliveryStatus::stale_ignored;
  last = gen_step;
  for (int r = 0; r < n_; ++r) {
    if (r != sender) age_[static_cast<std::size_t>(r * n_ + sender)] = now - gen_step;
  }
  return DeliveryStatus::recorded;
}

double AoiTable::mean_age() const {
  if (n_ < 2) return 0.0;
  std::int64_t total = 0;
  for (const auto a : age_) total += a;
  return static_cast<double>(total) / static_cast<double>(n_ * (n_ - 1));
}

std::int64_t AoiTable::max_age() const { return *std::max_element(age_.begin(), age_.end()); }

AoiSummary summarize(std::span<const AoiTable> history) {
  if (history.empty()) throw Error(ErrorCode::empty_history, "no AoI tables recorded");
  const int n = history.front().size();
  AoiSummary summary;
  summary.mean_per_link = Eigen::MatrixXd::Zero(n, n);
  summary.peak_per_link = Eigen::MatrixXd::Zero(n, n);
  for (const auto& table : history) {
    if (table.size() != n) throw Error(ErrorCode::shape_mismatch, "AoI history mixes table sizes");
    for (int r = 0; r < n; ++r) {
      for (int s = 0; s < n; ++s) {
        const auto a = static_cast<double>(table.age(r, s));
        summary.mean_per_link(r, s) += a;
        summary.peak_per_link(r, s) = std::max(summary.peak_per_link(r, s), a);
      }
    }
  }
  summary.mean_per_link /= static_cast<double>(history.size());
  if (n > 1) {
    // The diagonal is identically zero, so full sums equal off-diagonal sums.
    summary.mean = summary.mean_per_link.sum() / static_cast<double>(n * (n - 1));
    summary.peak = summary.peak_per_link.maxCoeff();
  }
  return summary;
}

}  // namespace semcomm
