#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "semcomm/error.hpp"
#include "semcomm/rng.hpp"

namespace semcomm {

/// Fixed-capacity FIFO ring of experiences with uniform sampling.
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw Error(ErrorCode::precondition, "replay capacity must be positive");
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }

  void push(T item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
      return;
    }
    items_[head_] = std::move(item);
    head_ = (head_ + 1) % capacity_;
  }

  /// i-th stored item, oldest first.
  const T& at(std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

  /// `batch_size` distinct items, uniformly at random (Floyd's algorithm).
  std::vector<const T*> sample(std::size_t batch_size, Rng& rng) const {
    const std::size_t n = items_.size();
    if (batch_size > n) {
      throw Error(ErrorCode::insufficient_samples, "requested " + std::to_string(batch_size) +
                                                       " samples from a buffer of " + std::to_string(n));
    }
    std::vector<std::size_t> chosen;
    chosen.reserve(batch_size);
    std::vector<bool> taken(n, false);
    for (std::size_t j = n - batch_size; j < n; ++j) {
      const std::size_t t = rng.index(j + 1);
      const std::size_t pick = taken[t] ? j : t;
      taken[pick] = true;
      chosen.push_back(pick);
    }
    std::vector<const T*> batch;
    batch.reserve(batch_size);
    for (const std::size_t i : chosen) batch.push_back(&items_[i]);
    return batch;
  }

  void clear() {
    items_.clear();
    head_ = 0;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest item once full
  std::vector<T> items_;
};

}  // namespace semcomm
