#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tbger/common.hpp"
#include "tbger/posts_parser.hpp"

namespace tbger {

struct Question {
  PostId id = 0;
  Timestamp creation_date = 0;
  // Lowercase, trimmed, deduplicated. Empty only for flagged untagged rows.
  std::vector<std::string> tags;
  std::optional<PostId> accepted_answer_id;
  std::optional<UserId> asker_id;

  bool operator==(const Question&) const = default;
};

struct Answer {
  PostId id = 0;
  PostId question_id = 0;
  UserId owner_user_id = 0;
  Timestamp creation_date = 0;
  std::int64_t score = 0;

  bool operator==(const Answer&) const = default;
};

// Validated questions and answers of one site. Every answer references a
// question in the corpus and every accepted_answer_id references an answer.
struct PostCorpus {
  std::string site_name;
  std::map<PostId, Question> questions;
  std::map<PostId, Answer> answers;

  bool operator==(const PostCorpus&) const = default;
};

struct CorpusStats {
  std::int64_t questions = 0;
  std::int64_t answers = 0;
  std::int64_t duplicate_ids = 0;
  std::int64_t orphan_answers = 0;
  std::int64_t ownerless_answers = 0;
  std::int64_t answers_before_question = 0;
  std::int64_t dangling_accepted_answers = 0;
  std::int64_t untagged_questions = 0;
  std::int64_t evaluable_questions = 0;
};

struct CorpusBuild {
  PostCorpus corpus;
  CorpusStats stats;
};

// Lowercases (ASCII), trims whitespace and removes repeats, keeping first
// occurrence order.
std::vector<std::string> normalize_tags(std::span<const std::string> tags);

CorpusBuild build_corpus(std::span<const RawPost> posts, std::string site_name);

struct IngestResult {
  PostCorpus corpus;
  CorpusStats corpus_stats;
  ParseStats parse_stats;
};

// parse_posts followed by build_corpus.
IngestResult ingest_posts(std::istream& in, std::string site_name);
// Throws IoError naming the path when it cannot be opened.
IngestResult ingest_posts_file(const std::string& path, std::string site_name);

// Question has a tag list and an accepted answer with a known owner, so it
// can serve as a ground-truth evaluation unit.
bool is_evaluable(const PostCorpus& corpus, const Question& q);

// Owner of the accepted answer, when known.
std::optional<UserId> ground_truth_user(const PostCorpus& corpus, const Question& q);

// Earliest creation date over all posts (t_1). Zero for an empty corpus.
Timestamp corpus_origin(const PostCorpus& corpus);

// Dataset-level counts, comparable with published per-site summaries.
struct CorpusSummary {
  std::int64_t questions = 0;
  std::int64_t evaluable_questions = 0;
  std::int64_t answers = 0;
  std::int64_t answerers = 0;
  std::int64_t tags = 0;
  std::int64_t evaluable_tags = 0;
  Timestamp first_post = 0;
  Timestamp last_post = 0;
};

CorpusSummary summarize(const PostCorpus& corpus);

// Newline-delimited JSON: one site record, then questions and answers in
// ascending id order.
void write_corpus(std::ostream& out, const PostCorpus& corpus);
PostCorpus read_corpus(std::istream& in);

void save_corpus(const std::string& path, const PostCorpus& corpus);
PostCorpus load_corpus(const std::string& path);

// FNV-1a over the serialized form.
std::string corpus_fingerprint(const PostCorpus& corpus);

}  // namespace tbger
