#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tbger/activity.hpp"

using namespace tbger;

namespace {

constexpr Duration kDay = kSecondsPerDay;
constexpr Duration kWindow = 30 * kDay;
constexpr Timestamp kQuery = 1'600'000'000;

TrainingRecord record(std::uint32_t user, std::vector<std::uint32_t> tags, Timestamp t) {
  return {user, std::move(tags), t, 1};
}

std::vector<TrainingRecord> random_records(std::mt19937_64& rng, std::uint32_t users,
                                           std::uint32_t tags, int count) {
  std::vector<TrainingRecord> out;
  std::uniform_int_distribution<Timestamp> age(1, 400 * kDay);
  for (int i = 0; i < count; ++i) {
    TrainingRecord r;
    r.answerer_index = static_cast<std::uint32_t>(rng() % users);
    const auto n = 1 + rng() % std::min<std::uint32_t>(5, tags);
    while (r.tag_indices.size() < n) {
      const auto t = static_cast<std::uint32_t>(rng() % tags);
      if (std::find(r.tag_indices.begin(), r.tag_indices.end(), t) == r.tag_indices.end()) {
        r.tag_indices.push_back(t);
      }
    }
    r.answer_time = kQuery - age(rng);
    r.answer_score = 1;
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.answer_time < b.answer_time; });
  return out;
}

}  // namespace

TEST_CASE("contribution per tag") {
  CHECK(activity_contribution(3) == 1.0 / 3.0);
  CHECK(activity_contribution(1) == 1.0);
  CHECK(activity_contribution(5) == 0.2);
  CHECK_THROWS_AS(activity_contribution(0), PreconditionError);
  CHECK_THROWS_AS(activity_contribution(6), PreconditionError);
}

TEST_CASE("three-tag answer credits a third to each tag") {
  const std::vector<TrainingRecord> records{record(0, {0, 1, 2}, kQuery - kDay)};
  const auto s = temporal_activity(build_windowed_activity(records, 1, 3, kWindow, kQuery), kQuery);
  // Recent window: 1/3 discounted by 1/2.
  for (std::uint32_t t = 0; t < 3; ++t) CHECK(s.matrix.at(0, t) == 0.5 * (1.0 / 3.0));
  const auto plain = total_activity(build_windowed_activity(records, 1, 3, kWindow, kQuery));
  for (std::uint32_t t = 0; t < 3; ++t) CHECK(plain.at(0, t) == 1.0 / 3.0);
}

TEST_CASE("kernel values") {
  CHECK(hyperbolic_discount(1) == 0.5);
  CHECK(hyperbolic_discount(10) == 1.0 / 11.0);
  CHECK_THROWS_AS(hyperbolic_discount(0), PreconditionError);
}

TEST_CASE("window ordinals") {
  // previous month
  CHECK(window_ordinal(kQuery - 10 * kDay, kQuery, kWindow) == 1);
  CHECK(window_ordinal(kQuery - 1, kQuery, kWindow) == 1);
  CHECK(window_ordinal(kQuery - kWindow + 1, kQuery, kWindow) == 1);
  CHECK(window_ordinal(kQuery - kWindow, kQuery, kWindow) == 2);
  // ten months back
  CHECK(window_ordinal(kQuery - 290 * kDay, kQuery, kWindow) == 10);
  CHECK_THROWS_AS(window_ordinal(kQuery, kQuery, kWindow), PreconditionError);
  CHECK_THROWS_AS(window_ordinal(kQuery + 1, kQuery, kWindow), PreconditionError);
}

TEST_CASE("two windows combine with their discounts") {
  const std::vector<TrainingRecord> records{record(0, {0}, kQuery - 290 * kDay),
                                            record(0, {0}, kQuery - 10 * kDay)};
  const auto w = build_windowed_activity(records, 1, 1, kWindow, kQuery);
  CHECK(w.total_windows() == 10);
  CHECK(w.windows.size() == 2);
  CHECK(temporal_activity(w, kQuery).matrix.at(0, 0) == 0.5 + 1.0 / 11.0);
}

TEST_CASE("records at or after the query time are refused") {
  const std::vector<TrainingRecord> records{record(0, {0}, kQuery)};
  CHECK_THROWS_AS(build_windowed_activity(records, 1, 1, kWindow, kQuery), PreconditionError);
}

TEST_CASE("sparse result equals the dense oracle exactly") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto users = 1 + static_cast<std::uint32_t>(rng() % 20);
    const auto tags = 1 + static_cast<std::uint32_t>(rng() % 20);
    const auto records = random_records(rng, users, tags, 1 + static_cast<int>(rng() % 80));
    const auto got = temporal_activity(
        build_windowed_activity(records, users, tags, kWindow, kQuery), kQuery);
    const auto want = oracle::temporal_activity(records, users, tags, kWindow, kQuery);
    CHECK(oracle::to_dense(got.matrix) == want);
  }
}

TEST_CASE("activity is additive over answers") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto records = random_records(rng, 8, 8, 40);
    std::vector<TrainingRecord> a, b;
    for (std::size_t i = 0; i < records.size(); ++i) (i % 2 ? a : b).push_back(records[i]);
    const auto whole = temporal_activity(build_windowed_activity(records, 8, 8, kWindow, kQuery), kQuery);
    const auto pa = temporal_activity(build_windowed_activity(a, 8, 8, kWindow, kQuery), kQuery);
    const auto pb = temporal_activity(build_windowed_activity(b, 8, 8, kWindow, kQuery), kQuery);
    for (std::uint32_t i = 0; i < 8; ++i) {
      for (std::uint32_t t = 0; t < 8; ++t) {
        CHECK(std::abs(whole.matrix.at(i, t) - pa.matrix.at(i, t) - pb.matrix.at(i, t)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("recent activity outweighs the same activity further back") {
  const std::vector<TrainingRecord> records{record(0, {0}, kQuery - 5 * kDay),
                                            record(1, {0}, kQuery - 200 * kDay)};
  const auto s = temporal_activity(build_windowed_activity(records, 2, 1, kWindow, kQuery), kQuery);
  CHECK(s.matrix.at(0, 0) > s.matrix.at(1, 0));
}

TEST_CASE("rebase matches a fresh build at the later query time") {
  std::mt19937_64 rng(3);
  const auto records = random_records(rng, 6, 5, 50);
  const auto w = build_windowed_activity(records, 6, 5, kWindow, kQuery);
  const Timestamp later = kQuery + 4 * kWindow;
  const auto fresh = build_windowed_activity(records, 6, 5, kWindow, later);
  CHECK(rebase(w, later) == fresh);
  CHECK(temporal_activity(w, later).matrix == temporal_activity(fresh, later).matrix);
  CHECK_THROWS_AS(rebase(w, kQuery + kDay), PreconditionError);
  CHECK_THROWS_AS(rebase(w, kQuery - kWindow), PreconditionError);
}

TEST_CASE("snapshot round trip") {
  std::mt19937_64 rng(9);
  const auto records = random_records(rng, 7, 9, 60);
  const auto w = build_windowed_activity(records, 7, 9, kWindow, kQuery, kQuery - 500 * kDay);
  std::stringstream buffer;
  write_snapshot(buffer, w);
  CHECK(read_snapshot(buffer) == w);

  std::string bytes;
  {
    std::ostringstream out;
    write_snapshot(out, w);
    bytes = out.str();
  }
  CHECK(bytes.substr(0, 7) == "TBGWACT");
  std::istringstream bad(std::string("XXXXXXX") + bytes.substr(7));
  CHECK_THROWS(read_snapshot(bad));
  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS(read_snapshot(truncated));
}
