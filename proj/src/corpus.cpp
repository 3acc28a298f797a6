#include "tbger/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace tbger {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kCorpusFormat = 1;

template <typename T>
ordered_json optional_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

template <typename T>
std::optional<T> optional_field(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

std::vector<std::string> normalize_tags(std::span<const std::string> tags) {
  std::vector<std::string> out;
  for (const auto& raw : tags) {
    std::size_t b = 0;
    std::size_t e = raw.size();
    while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
    std::string tag = raw.substr(b, e - b);
    for (char& c : tag) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (tag.empty() || std::find(out.begin(), out.end(), tag) != out.end()) continue;
    out.push_back(std::move(tag));
  }
  return out;
}

CorpusBuild build_corpus(std::span<const RawPost> posts, std::string site_name) {
  CorpusBuild result;
  PostCorpus& corpus = result.corpus;
  CorpusStats& stats = result.stats;
  corpus.site_name = std::move(site_name);

  std::set<PostId> seen;
  for (const RawPost& p : posts) {
    if (p.post_type != PostType::question) continue;
    if (!seen.insert(p.id).second) {
      ++stats.duplicate_ids;
      continue;
    }
    Question q;
    q.id = p.id;
    q.creation_date = p.creation_date;
    if (p.tags) q.tags = normalize_tags(*p.tags);
    q.accepted_answer_id = p.accepted_answer_id;
    q.asker_id = p.owner_user_id;
    corpus.questions.emplace(q.id, std::move(q));
  }

  for (const RawPost& p : posts) {
    if (p.post_type != PostType::answer) continue;
    if (!seen.insert(p.id).second) {
      ++stats.duplicate_ids;
      continue;
    }
    const auto parent = p.parent_id ? corpus.questions.find(*p.parent_id) : corpus.questions.end();
    if (parent == corpus.questions.end()) {
      ++stats.orphan_answers;
      continue;
    }
    if (!p.owner_user_id) {
      ++stats.ownerless_answers;
      continue;
    }
    if (p.creation_date < parent->second.creation_date) {
      ++stats.answers_before_question;
      continue;
    }
    corpus.answers.emplace(p.id, Answer{p.id, parent->first, *p.owner_user_id, p.creation_date,
                                        p.score});
  }

  for (auto& [id, q] : corpus.questions) {
    if (q.accepted_answer_id && !corpus.answers.contains(*q.accepted_answer_id)) {
      ++stats.dangling_accepted_answers;
      q.accepted_answer_id.reset();
    }
    if (q.tags.empty()) ++stats.untagged_questions;
    if (is_evaluable(corpus, q)) ++stats.evaluable_questions;
  }
  stats.questions = static_cast<std::int64_t>(corpus.questions.size());
  stats.answers = static_cast<std::int64_t>(corpus.answers.size());
  return result;
}

IngestResult ingest_posts(std::istream& in, std::string site_name) {
  IngestResult result;
  const auto posts = parse_posts(in, &result.parse_stats);
  auto built = build_corpus(posts, std::move(site_name));
  result.corpus = std::move(built.corpus);
  result.corpus_stats = built.stats;
  return result;
}

IngestResult ingest_posts_file(const std::string& path, std::string site_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open Posts.xml dump " + path);
  return ingest_posts(in, std::move(site_name));
}

std::optional<UserId> ground_truth_user(const PostCorpus& corpus, const Question& q) {
  if (!q.accepted_answer_id) return std::nullopt;
  const auto it = corpus.answers.find(*q.accepted_answer_id);
  if (it == corpus.answers.end() || it->second.question_id != q.id) return std::nullopt;
  return it->second.owner_user_id;
}

bool is_evaluable(const PostCorpus& corpus, const Question& q) {
  return !q.tags.empty() && ground_truth_user(corpus, q).has_value();
}

Timestamp corpus_origin(const PostCorpus& corpus) {
  bool any = false;
  Timestamp origin = 0;
  auto visit = [&](Timestamp t) {
    if (!any || t < origin) origin = t;
    any = true;
  };
  for (const auto& [id, q] : corpus.questions) visit(q.creation_date);
  for (const auto& [id, a] : corpus.answers) visit(a.creation_date);
  return origin;
}

CorpusSummary summarize(const PostCorpus& corpus) {
  CorpusSummary s;
  std::set<std::string> tags;
  std::set<std::string> evaluable_tags;
  std::set<UserId> answerers;
  bool any = false;
  auto span_time = [&](Timestamp t) {
    if (!any) s.first_post = s.last_post = t;
    s.first_post = std::min(s.first_post, t);
    s.last_post = std::max(s.last_post, t);
    any = true;
  };
  for (const auto& [id, q] : corpus.questions) {
    span_time(q.creation_date);
    tags.insert(q.tags.begin(), q.tags.end());
    if (is_evaluable(corpus, q)) {
      ++s.evaluable_questions;
      evaluable_tags.insert(q.tags.begin(), q.tags.end());
    }
  }
  for (const auto& [id, a] : corpus.answers) {
    span_time(a.creation_date);
    answerers.insert(a.owner_user_id);
  }
  s.questions = static_cast<std::int64_t>(corpus.questions.size());
  s.answers = static_cast<std::int64_t>(corpus.answers.size());
  s.answerers = static_cast<std::int64_t>(answerers.size());
  s.tags = static_cast<std::int64_t>(tags.size());
  s.evaluable_tags = static_cast<std::int64_t>(evaluable_tags.size());
  return s;
}

void write_corpus(std::ostream& out, const PostCorpus& corpus) {
  out << ordered_json{{"kind", "site"}, {"site_name", corpus.site_name}, {"format", kCorpusFormat}}
             .dump()
      << '\n';
  for (const auto& [id, q] : corpus.questions) {
    ordered_json j{{"kind", "q"},
                   {"id", q.id},
                   {"creation_date", q.creation_date},
                   {"tags", q.tags},
                   {"accepted_answer_id", optional_json(q.accepted_answer_id)},
                   {"asker_id", optional_json(q.asker_id)}};
    out << j.dump() << '\n';
  }
  for (const auto& [id, a] : corpus.answers) {
    ordered_json j{{"kind", "a"},
                   {"id", a.id},
                   {"question_id", a.question_id},
                   {"owner_user_id", a.owner_user_id},
                   {"creation_date", a.creation_date},
                   {"score", a.score}};
    out << j.dump() << '\n';
  }
}

PostCorpus read_corpus(std::istream& in) {
  PostCorpus corpus;
  std::string line;
  std::int64_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = "corpus line " + std::to_string(line_no);
    try {
      const auto j = nlohmann::json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "site") {
        if (j.at("format").get<int>() != kCorpusFormat) {
          throw ParseError(where + ": unsupported corpus format");
        }
        corpus.site_name = j.at("site_name").get<std::string>();
        have_header = true;
      } else if (kind == "q") {
        Question q;
        q.id = j.at("id").get<PostId>();
        q.creation_date = j.at("creation_date").get<Timestamp>();
        q.tags = j.at("tags").get<std::vector<std::string>>();
        q.accepted_answer_id = optional_field<PostId>(j, "accepted_answer_id");
        q.asker_id = optional_field<UserId>(j, "asker_id");
        if (q.tags.size() > kMaxTagsPerQuestion) throw ParseError(where + ": too many tags");
        if (!corpus.questions.emplace(q.id, std::move(q)).second) {
          throw ParseError(where + ": duplicate question id");
        }
      } else if (kind == "a") {
        Answer a;
        a.id = j.at("id").get<PostId>();
        a.question_id = j.at("question_id").get<PostId>();
        a.owner_user_id = j.at("owner_user_id").get<UserId>();
        a.creation_date = j.at("creation_date").get<Timestamp>();
        a.score = j.at("score").get<std::int64_t>();
        const auto parent = corpus.questions.find(a.question_id);
        if (parent == corpus.questions.end()) {
          throw ParseError(where + ": answer references unknown question");
        }
        if (a.creation_date < parent->second.creation_date) {
          throw ParseError(where + ": answer predates its question");
        }
        if (!corpus.answers.emplace(a.id, a).second) {
          throw ParseError(where + ": duplicate answer id");
        }
      } else {
        throw ParseError(where + ": unknown record kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  if (!have_header) throw ParseError("corpus file has no site record");
  for (const auto& [id, q] : corpus.questions) {
    if (q.accepted_answer_id && !corpus.answers.contains(*q.accepted_answer_id)) {
      throw ParseError("question " + std::to_string(id) + " references unknown accepted answer");
    }
  }
  return corpus;
}

void save_corpus(const std::string& path, const PostCorpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_corpus(out, corpus);
  if (!out) throw IoError("write failed: " + path);
}

PostCorpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path);
  return read_corpus(in);
}

std::string corpus_fingerprint(const PostCorpus& corpus) {
  std::ostringstream out;
  write_corpus(out, corpus);
  return hex64(fnv1a64(out.str()));
}

}  // namespace tbger
