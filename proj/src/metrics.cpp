#include "tbger/metrics.hpp"

#include <vector>

namespace tbger {

namespace {

std::vector<std::uint32_t> evaluated_ranks(std::span<const QuestionResult> results) {
  std::vector<std::uint32_t> ranks;
  for (const auto& r : results) {
    if (r.evaluated()) ranks.push_back(r.rank);
  }
  return ranks;
}

void check_ranks(std::span<const std::uint32_t> ranks) {
  if (ranks.empty()) throw UndefinedMetricError("no evaluated questions");
  for (auto r : ranks) {
    if (r < 1) throw PreconditionError("ranks are 1-based");
  }
}

}  // namespace

double mrr(std::span<const std::uint32_t> ranks) {
  check_ranks(ranks);
  double sum = 0.0;
  for (auto r : ranks) sum += 1.0 / static_cast<double>(r);
  return sum / static_cast<double>(ranks.size());
}

double mrr(std::span<const QuestionResult> results) { return mrr(evaluated_ranks(results)); }

double precision_at_k(std::span<const std::uint32_t> ranks, std::uint32_t k) {
  if (k < 1) throw PreconditionError("K must be >= 1");
  check_ranks(ranks);
  std::size_t hits = 0;
  for (auto r : ranks) {
    if (r <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double precision_at_k(std::span<const QuestionResult> results, std::uint32_t k) {
  return precision_at_k(evaluated_ranks(results), k);
}

MetricSummary summarize_metrics(std::span<const QuestionResult> results) {
  MetricSummary s;
  const auto ranks = evaluated_ranks(results);
  s.evaluated = static_cast<std::int64_t>(ranks.size());
  if (!ranks.empty()) {
    s.mrr = mrr(ranks);
    s.p_at_1 = precision_at_k(ranks, 1);
    s.p_at_3 = precision_at_k(ranks, 3);
  }
  return s;
}

}  // namespace tbger
