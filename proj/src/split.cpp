#include "tbger/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace tbger {

namespace {

constexpr int kManifestFormat = 1;

QuestionKey key_of(const Question& q) { return {q.creation_date, q.id}; }

// Key of the first question after the training period, if any.
std::optional<QuestionKey> training_cutoff(const DatasetSplit& split, const PostCorpus& corpus) {
  const std::vector<PostId>* later = !split.validation.empty() ? &split.validation : &split.test;
  if (later->empty()) return std::nullopt;
  const auto it = corpus.questions.find(later->front());
  if (it == corpus.questions.end()) {
    throw ConfigError("split references unknown question " + std::to_string(later->front()));
  }
  return key_of(it->second);
}

bool in_training_period(const Question& q, const std::optional<QuestionKey>& cutoff) {
  return !cutoff || key_of(q) < *cutoff;
}

}  // namespace

void SplitRatios::validate() const {
  if (train < 0 || validation < 0 || test < 0 || !std::isfinite(train + validation + test) ||
      std::abs(train + validation + test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
}

DatasetSplit chronological_split(const PostCorpus& corpus, const SplitRatios& ratios) {
  ratios.validate();
  std::vector<QuestionKey> ordered;
  for (const auto& [id, q] : corpus.questions) {
    if (is_evaluable(corpus, q)) ordered.push_back(key_of(q));
  }
  if (ordered.size() < kMinEvaluableQuestions) {
    throw SplitError("need at least " + std::to_string(kMinEvaluableQuestions) +
                     " evaluable questions, corpus has " + std::to_string(ordered.size()));
  }
  std::sort(ordered.begin(), ordered.end());

  const auto n = static_cast<double>(ordered.size());
  const auto n_test = static_cast<std::size_t>(std::llround(ratios.test * n));
  const auto n_val = static_cast<std::size_t>(std::llround(ratios.validation * n));
  const std::size_t n_train = ordered.size() - n_test - n_val;

  DatasetSplit split;
  split.ratios = ratios;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    auto& part = i < n_train ? split.train : (i < n_train + n_val ? split.validation : split.test);
    part.push_back(ordered[i].second);
  }
  return split;
}

std::vector<PostId> training_period_questions(const DatasetSplit& split, const PostCorpus& corpus) {
  const auto cutoff = training_cutoff(split, corpus);
  std::vector<PostId> ids;
  for (const auto& [id, q] : corpus.questions) {
    if (in_training_period(q, cutoff)) ids.push_back(id);
  }
  return ids;
}

std::unordered_map<UserId, std::int64_t> training_answer_counts(const DatasetSplit& split,
                                                                const PostCorpus& corpus) {
  const auto cutoff = training_cutoff(split, corpus);
  std::unordered_map<UserId, std::int64_t> counts;
  for (const auto& [id, a] : corpus.answers) {
    if (in_training_period(corpus.questions.at(a.question_id), cutoff)) ++counts[a.owner_user_id];
  }
  return counts;
}

std::vector<UserId> select_candidates(const DatasetSplit& split, const PostCorpus& corpus,
                                      int min_answers) {
  if (min_answers < 1) throw ConfigError("min_answers must be at least 1");
  std::vector<UserId> users;
  for (const auto& [user, count] : training_answer_counts(split, corpus)) {
    if (count >= min_answers) users.push_back(user);
  }
  if (users.empty()) {
    throw ConfigError("no user has " + std::to_string(min_answers) + " or more training answers");
  }
  std::sort(users.begin(), users.end());
  return users;
}

TagIndex build_tag_index(const DatasetSplit& split, const PostCorpus& corpus) {
  const auto cutoff = training_cutoff(split, corpus);
  std::set<std::string> tags;
  for (const auto& [id, q] : corpus.questions) {
    if (in_training_period(q, cutoff)) tags.insert(q.tags.begin(), q.tags.end());
  }
  return TagIndex(std::vector<std::string>(tags.begin(), tags.end()));
}

std::vector<std::uint32_t> known_tag_indices(const TagIndex& tags,
                                             const std::vector<std::string>& question_tags) {
  std::vector<std::uint32_t> out;
  for (const auto& t : question_tags) {
    if (const auto idx = tags.find(t)) out.push_back(*idx);
  }
  return out;
}

std::vector<TrainingRecord> training_records(const DatasetSplit& split, const PostCorpus& corpus,
                                             const UserIndex& candidates, const TagIndex& tags) {
  const auto cutoff = training_cutoff(split, corpus);
  std::vector<std::pair<QuestionKey, TrainingRecord>> keyed;
  for (const auto& [id, a] : corpus.answers) {
    if (a.score <= 0) continue;
    const auto user = candidates.find(a.owner_user_id);
    if (!user) continue;
    const Question& q = corpus.questions.at(a.question_id);
    if (!in_training_period(q, cutoff) || q.tags.empty()) continue;
    TrainingRecord r;
    r.answerer_index = *user;
    r.tag_indices = known_tag_indices(tags, q.tags);
    r.answer_time = a.creation_date;
    r.answer_score = a.score;
    keyed.emplace_back(QuestionKey{a.creation_date, a.id}, std::move(r));
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<TrainingRecord> records;
  records.reserve(keyed.size());
  for (auto& [k, r] : keyed) records.push_back(std::move(r));
  return records;
}

TrainingData build_training_data(const DatasetSplit& split, const PostCorpus& corpus,
                                 const std::vector<UserId>& candidates) {
  TrainingData data;
  data.users = UserIndex(candidates);
  data.tags = build_tag_index(split, corpus);
  data.records = training_records(split, corpus, data.users, data.tags);
  data.answer_counts.assign(data.users.size(), 0);

  const auto cutoff = training_cutoff(split, corpus);
  std::vector<std::pair<QuestionKey, AnswerEvent>> keyed;
  for (const auto& [id, a] : corpus.answers) {
    const auto user = data.users.find(a.owner_user_id);
    if (!user || !in_training_period(corpus.questions.at(a.question_id), cutoff)) continue;
    ++data.answer_counts[*user];
    keyed.emplace_back(QuestionKey{a.creation_date, a.id}, AnswerEvent{*user, a.creation_date, a.score});
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [k, e] : keyed) data.answers.push_back(e);
  return data;
}

SplitManifest make_manifest(const PostCorpus& corpus, const SplitRatios& ratios, int min_answers) {
  SplitManifest m;
  m.site_name = corpus.site_name;
  m.corpus_fingerprint = corpus_fingerprint(corpus);
  m.split = chronological_split(corpus, ratios);
  m.min_answers = min_answers;
  m.candidates = select_candidates(m.split, corpus, min_answers);
  return m;
}

void write_manifest(std::ostream& out, const SplitManifest& m) {
  nlohmann::ordered_json j;
  j["format"] = kManifestFormat;
  j["site_name"] = m.site_name;
  j["corpus_fingerprint"] = m.corpus_fingerprint;
  j["ratios"] = {m.split.ratios.train, m.split.ratios.validation, m.split.ratios.test};
  j["min_answers"] = m.min_answers;
  j["train"] = m.split.train;
  j["validation"] = m.split.validation;
  j["test"] = m.split.test;
  j["candidates"] = m.candidates;
  out << j.dump(1) << '\n';
}

SplitManifest read_manifest(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format").get<int>() != kManifestFormat) {
      throw ParseError("unsupported manifest format");
    }
    SplitManifest m;
    m.site_name = j.at("site_name").get<std::string>();
    m.corpus_fingerprint = j.at("corpus_fingerprint").get<std::string>();
    const auto ratios = j.at("ratios").get<std::vector<double>>();
    if (ratios.size() != 3) throw ParseError("manifest ratios must have three entries");
    m.split.ratios = {ratios[0], ratios[1], ratios[2]};
    m.min_answers = j.at("min_answers").get<int>();
    m.split.train = j.at("train").get<std::vector<PostId>>();
    m.split.validation = j.at("validation").get<std::vector<PostId>>();
    m.split.test = j.at("test").get<std::vector<PostId>>();
    m.candidates = j.at("candidates").get<std::vector<UserId>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
}

void save_manifest(const std::string& path, const SplitManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_manifest(out, manifest);
  if (!out) throw IoError("write failed: " + path);
}

SplitManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path);
  return read_manifest(in);
}

void check_manifest(const SplitManifest& manifest, const PostCorpus& corpus) {
  if (manifest.corpus_fingerprint != corpus_fingerprint(corpus)) {
    throw ConfigError("manifest was built from a different corpus (fingerprint mismatch)");
  }
  for (const auto* part : {&manifest.split.train, &manifest.split.validation, &manifest.split.test}) {
    for (PostId id : *part) {
      if (!corpus.questions.contains(id)) {
        throw ConfigError("manifest lists unknown question " + std::to_string(id));
      }
    }
  }
}

}  // namespace tbger
