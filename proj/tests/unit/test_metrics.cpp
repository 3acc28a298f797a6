#include <doctest.h>

#include <cmath>
#include <random>

#include "tbger/metrics.hpp"

using namespace tbger;

namespace {

QuestionResult ranked(std::uint32_t rank) {
  QuestionResult r;
  r.rank = rank;
  return r;
}

}  // namespace

TEST_CASE("reciprocal rank means") {
  CHECK(mrr(std::vector<std::uint32_t>{1, 1, 1}) == 1.0);
  CHECK(std::abs(mrr(std::vector<std::uint32_t>{1, 2, 4}) - 0.58333333333) < 1e-9);
  CHECK(mrr(std::vector<std::uint32_t>{1, 2, 4}) == (1.0 + 0.5 + 0.25) / 3.0);
}

TEST_CASE("precision at k") {
  const std::vector<std::uint32_t> ranks{1, 2, 4};
  CHECK(precision_at_k(ranks, 1) == 1.0 / 3.0);
  CHECK(precision_at_k(ranks, 3) == 2.0 / 3.0);
  CHECK(precision_at_k(ranks, 4) == 1.0);
}

TEST_CASE("empty input is undefined") {
  CHECK_THROWS_AS(mrr(std::vector<std::uint32_t>{}), UndefinedMetricError);
  CHECK_THROWS_AS(precision_at_k(std::vector<std::uint32_t>{}, 1), UndefinedMetricError);
  CHECK_THROWS_AS(precision_at_k(std::vector<std::uint32_t>{1}, 0), PreconditionError);
  const auto s = summarize_metrics(std::vector<QuestionResult>{});
  CHECK(s.evaluated == 0);
  CHECK_FALSE(s.mrr);
}

TEST_CASE("only evaluated results count") {
  std::vector<QuestionResult> results{ranked(1), ranked(2), ranked(4)};
  QuestionResult excluded;
  excluded.excluded = true;
  QuestionResult unscorable = ranked(9);
  unscorable.scorable = false;
  results.push_back(excluded);
  results.push_back(unscorable);
  const auto s = summarize_metrics(results);
  CHECK(s.evaluated == 3);
  CHECK(*s.mrr == mrr(std::vector<std::uint32_t>{1, 2, 4}));
  CHECK(*s.p_at_1 == 1.0 / 3.0);
  CHECK(*s.p_at_3 == 2.0 / 3.0);
}

TEST_CASE("metric identities on random ranks") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint32_t> ranks(1 + rng() % 50);
    for (auto& r : ranks) r = 1 + static_cast<std::uint32_t>(rng() % 10);
    const double p1 = precision_at_k(ranks, 1);
    const double p3 = precision_at_k(ranks, 3);
    const double m = mrr(ranks);
    CHECK(p1 <= p3);
    CHECK(p1 <= m);
    CHECK(m <= 1.0);
    // each question contributes at least 1/3 when within the top 3
    CHECK(m >= p1 + (p3 - p1) / 3.0 - 1e-12);
    const auto ones = std::count(ranks.begin(), ranks.end(), 1u);
    CHECK(p1 == static_cast<double>(ones) / ranks.size());
  }
}
