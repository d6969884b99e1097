#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "semcomm/rng.hpp"

#include "semcomm/aoi.hpp"
#include "semcomm/error.hpp"

using namespace semcomm;

TEST(Aoi, AdvanceIncrementsOffDiagonal) {
  AoiTable t(3);
  t.advance();
  t.advance();
  for (int r = 0; r < 3; ++r)
    for (int s = 0; s < 3; ++s) EXPECT_EQ(t.age(r, s), r == s ? 0 : 2);
  t.advance();
  t.advance();
  EXPECT_EQ(t.age(0, 1), 4);
}

TEST(Aoi, DeliverySetsAgeToNowMinusGeneration) {
  AoiTable t(3);
  for (int i = 0; i < 5; ++i) t.advance();
  EXPECT_EQ(t.record_delivery(1, 3, 5), DeliveryStatus::recorded);
  EXPECT_EQ(t.age(0, 1), 2);
  EXPECT_EQ(t.age(2, 1), 2);
  EXPECT_EQ(t.age(1, 1), 0);
  EXPECT_EQ(t.age(0, 2), 5);
  EXPECT_EQ(t.last_gen_step(1), 3);
  t.record_delivery(2, 5, 5);
  EXPECT_EQ(t.age(0, 2), 0);
}

TEST(Aoi, StaleDeliveryIgnored) {
  AoiTable t(2);
  for (int i = 0; i < 6; ++i) t.advance();
  t.record_delivery(0, 4, 6);
  const AoiTable before = t;
  EXPECT_EQ(t.record_delivery(0, 3, 6), DeliveryStatus::stale_ignored);
  EXPECT_EQ(t, before);
}

TEST(Aoi, FutureGenerationIsPrecondition) {
  AoiTable t(2);
  EXPECT_THROW(t.record_delivery(0, 3, 2), Error);
  EXPECT_THROW(t.record_delivery(2, 0, 0), Error);
}

TEST(Aoi, RandomScheduleAgainstModel) {
  // Reference: age(r, s) = now - newest recorded generation of s, or now when
  // nothing from s has arrived; zero on the diagonal.
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(5));
    AoiTable t(n);
    std::vector<std::int64_t> newest(static_cast<std::size_t>(n), -1);
    for (std::int64_t now = 1; now <= 40; ++now) {
      t.advance();
      if (rng.bernoulli(0.5)) {
        const int s = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
        const std::int64_t gen = std::max<std::int64_t>(0, now - static_cast<std::int64_t>(rng.index(4)));
        auto& last = newest[static_cast<std::size_t>(s)];
        const bool stale = last > gen;
        EXPECT_EQ(t.record_delivery(s, gen, now),
                  stale ? DeliveryStatus::stale_ignored : DeliveryStatus::recorded);
        if (!stale) last = gen;
      }
      for (int r = 0; r < n; ++r) {
        for (int s = 0; s < n; ++s) {
          const auto g = newest[static_cast<std::size_t>(s)];
          const std::int64_t want = r == s ? 0 : (g < 0 ? now : now - g);
          ASSERT_EQ(t.age(r, s), want);
        }
      }
    }
  }
}

TEST(AoiSummary, DeliveryEveryStepGivesZero) {
  AoiTable t(3);
  std::vector<AoiTable> history;
  for (int now = 1; now <= 10; ++now) {
    t.advance();
    for (int s = 0; s < 3; ++s) t.record_delivery(s, now, now);
    history.push_back(t);
  }
  const AoiSummary s = summarize(history);
  EXPECT_EQ(s.mean, 0.0);
  EXPECT_EQ(s.peak, 0.0);
}

TEST(AoiSummary, NoDeliveryPeakEqualsHorizon) {
  AoiTable t(4);
  std::vector<AoiTable> history;
  const int horizon = 17;
  for (int now = 1; now <= horizon; ++now) {
    t.advance();
    history.push_back(t);
  }
  const AoiSummary s = summarize(history);
  EXPECT_EQ(s.peak, horizon);
  EXPECT_DOUBLE_EQ(s.mean, (horizon + 1) / 2.0);
  EXPECT_EQ(s.peak_per_link(0, 1), horizon);
  EXPECT_EQ(s.peak_per_link(2, 2), 0.0);
}

TEST(AoiSummary, AlternatingDeliveryCycles) {
  // Step 1 delivers (age 0), step 2 skips (age 1), ...: ages 0,1,0,1 -> mean 0.5.
  AoiTable t(2);
  std::vector<AoiTable> history;
  std::vector<std::int64_t> ages;
  for (int now = 1; now <= 8; ++now) {
    t.advance();
    if (now % 2 == 1) {
      t.record_delivery(0, now, now);
      t.record_delivery(1, now, now);
    }
    history.push_back(t);
    ages.push_back(t.age(0, 1));
  }
  EXPECT_EQ(ages, (std::vector<std::int64_t>{0, 1, 0, 1, 0, 1, 0, 1}));
  const AoiSummary s = summarize(history);
  EXPECT_DOUBLE_EQ(s.mean, 0.5);
  EXPECT_DOUBLE_EQ(s.peak, 1.0);
}

TEST(AoiSummary, EmptyHistory) {
  try {
    summarize({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_history);
  }
}

TEST(Aoi, MeanAndMax) {
  AoiTable single(1);
  single.advance();
  EXPECT_EQ(single.mean_age(), 0.0);
  AoiTable t(3);
  t.advance();
  t.advance();
  t.record_delivery(0, 2, 2);
  // Off-diagonal: column 0 -> 0, 0 (two entries); others 2 (four entries).
  EXPECT_DOUBLE_EQ(t.mean_age(), 8.0 / 6.0);
  EXPECT_EQ(t.max_age(), 2);
  EXPECT_EQ(t.ages_for(1), (std::vector<std::int64_t>{0, 0, 2}));
}
