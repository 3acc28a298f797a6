#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "tbger/common.hpp"

namespace tbger {

// Raised when a metric is requested over zero evaluated questions.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

struct QuestionResult {
  PostId question_id = 0;
  UserId ground_truth_user = 0;  // owner of the accepted answer
  std::uint32_t rank = 0;        // 1-based position of the ground truth; 0 if excluded
  bool scorable = true;          // at least one question tag was known
  bool excluded = false;         // ground truth not among the candidates
  bool cold = false;             // ground truth below the cold-start answer threshold
  Timestamp query_time = 0;      // start of the question's time block

  // Counted in metric denominators.
  bool evaluated() const { return scorable && !excluded; }
};

// Mean of 1/rank over evaluated questions.
double mrr(std::span<const QuestionResult> results);
double mrr(std::span<const std::uint32_t> ranks);

// Fraction of evaluated questions whose ground truth is within the top k.
double precision_at_k(std::span<const QuestionResult> results, std::uint32_t k);
double precision_at_k(std::span<const std::uint32_t> ranks, std::uint32_t k);

struct MetricSummary {
  std::int64_t evaluated = 0;
  std::optional<double> mrr;  // empty when nothing was evaluated
  std::optional<double> p_at_1;
  std::optional<double> p_at_3;
};

MetricSummary summarize_metrics(std::span<const QuestionResult> results);

}  // namespace tbger
