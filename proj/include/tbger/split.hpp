#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tbger/common.hpp"
#include "tbger/corpus.hpp"

namespace tbger {

class SplitError : public Error {
 public:
  using Error::Error;
};

struct SplitRatios {
  double train = 0.7;
  double validation = 0.1;
  double test = 0.2;

  // Throws ConfigError unless all parts are non-negative and sum to 1.
  void validate() const;
};

// Chronological partition of the evaluable questions, each list ordered by
// (creation_date, id).
struct DatasetSplit {
  std::vector<PostId> train;
  std::vector<PostId> validation;
  std::vector<PostId> test;
  SplitRatios ratios;

  bool operator==(const DatasetSplit& o) const {
    return train == o.train && validation == o.validation && test == o.test;
  }
};

inline constexpr std::size_t kMinEvaluableQuestions = 10;

DatasetSplit chronological_split(const PostCorpus& corpus, const SplitRatios& ratios = {});

// Ordering key for questions: creation date, then id.
using QuestionKey = std::pair<Timestamp, PostId>;

// Every corpus question (evaluable or not) ordered before the first
// validation question; their answers form the training signal. Sorted by id.
std::vector<PostId> training_period_questions(const DatasetSplit& split, const PostCorpus& corpus);

// Number of answers (any score) each user gave to training-period questions.
std::unordered_map<UserId, std::int64_t> training_answer_counts(const DatasetSplit& split,
                                                                const PostCorpus& corpus);

// Users with at least `min_answers` training-period answers, ascending by id.
// Throws ConfigError when min_answers < 1 or nobody qualifies.
std::vector<UserId> select_candidates(const DatasetSplit& split, const PostCorpus& corpus,
                                      int min_answers);

// Bijection between external keys and dense indices 0..size-1, assigned in
// ascending key order.
template <typename Key>
class DenseIndex {
 public:
  DenseIndex() = default;
  // `keys` must be sorted and unique.
  explicit DenseIndex(std::vector<Key> keys) : keys_(std::move(keys)) {
    lookup_.reserve(keys_.size());
    for (std::uint32_t i = 0; i < keys_.size(); ++i) lookup_.emplace(keys_[i], i);
  }

  std::uint32_t size() const { return static_cast<std::uint32_t>(keys_.size()); }
  const Key& key(std::uint32_t index) const { return keys_.at(index); }
  const std::vector<Key>& keys() const { return keys_; }

  std::optional<std::uint32_t> find(const Key& key) const {
    const auto it = lookup_.find(key);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<Key> keys_;
  std::unordered_map<Key, std::uint32_t> lookup_;
};

using UserIndex = DenseIndex<UserId>;
using TagIndex = DenseIndex<std::string>;

// A positively scored training answer by a candidate user.
struct TrainingRecord {
  std::uint32_t answerer_index = 0;
  std::vector<std::uint32_t> tag_indices;
  Timestamp answer_time = 0;
  std::int64_t answer_score = 0;

  bool operator==(const TrainingRecord&) const = default;
};

// Any training answer by a candidate; feeds the vote-score baseline.
struct AnswerEvent {
  std::uint32_t user_index = 0;
  Timestamp time = 0;
  std::int64_t score = 0;
};

// Indices over the training period plus the derived answer streams.
struct TrainingData {
  UserIndex users;  // candidates
  TagIndex tags;    // tags of training-period questions
  std::vector<TrainingRecord> records;
  std::vector<AnswerEvent> answers;
  std::vector<std::int64_t> answer_counts;  // per user index, all scores
};

TagIndex build_tag_index(const DatasetSplit& split, const PostCorpus& corpus);

// One record per positively scored answer by a candidate to a
// training-period question, ordered by (answer_time, answer id).
std::vector<TrainingRecord> training_records(const DatasetSplit& split, const PostCorpus& corpus,
                                             const UserIndex& candidates, const TagIndex& tags);

TrainingData build_training_data(const DatasetSplit& split, const PostCorpus& corpus,
                                 const std::vector<UserId>& candidates);

// Maps question tags through the index, dropping unknown ones.
std::vector<std::uint32_t> known_tag_indices(const TagIndex& tags,
                                             const std::vector<std::string>& question_tags);

// Everything needed to replay an experiment on the same partition.
struct SplitManifest {
  std::string site_name;
  std::string corpus_fingerprint;
  DatasetSplit split;
  int min_answers = 5;
  std::vector<UserId> candidates;
};

SplitManifest make_manifest(const PostCorpus& corpus, const SplitRatios& ratios, int min_answers);
void write_manifest(std::ostream& out, const SplitManifest& manifest);
SplitManifest read_manifest(std::istream& in);
void save_manifest(const std::string& path, const SplitManifest& manifest);
SplitManifest load_manifest(const std::string& path);

// Throws ConfigError when the manifest was made from a different corpus or
// lists ids the corpus does not know.
void check_manifest(const SplitManifest& manifest, const PostCorpus& corpus);

}  // namespace tbger
