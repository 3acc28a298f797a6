#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tbger/common.hpp"

namespace tbger {

enum class PostType : int { question = 1, answer = 2 };

// One `<row>` of a Stack Exchange Posts.xml dump, restricted to questions and
// answers.
struct RawPost {
  PostId id = 0;
  PostType post_type = PostType::question;
  Timestamp creation_date = 0;
  std::int64_t score = 0;
  std::optional<UserId> owner_user_id;
  std::optional<std::vector<std::string>> tags;  // questions only
  std::optional<PostId> accepted_answer_id;      // questions only
  std::optional<PostId> parent_id;               // answers only

  bool operator==(const RawPost&) const = default;
};

struct ParseStats {
  std::int64_t rows_seen = 0;
  std::int64_t rows_emitted = 0;
  // PostTypeId outside {1, 2}: tag wikis, moderator nominations, ...
  std::int64_t rows_skipped_other_type = 0;
  // Id, PostTypeId, CreationDate or Score absent.
  std::int64_t rows_rejected_missing_attribute = 0;
  // Unparseable numbers or dates, or attributes contradicting the post type.
  std::int64_t rows_rejected_invalid = 0;
};

inline constexpr std::size_t kMaxTagsPerQuestion = 5;

// Splits a Tags attribute value. Accepts "<a><b>", the HTML-escaped form
// "&lt;a&gt;&lt;b&gt;" and the "|a|b|" form used by newer dumps. Empty
// segments are dropped; no case folding happens here.
std::vector<std::string> split_tags(std::string_view value);

// Pull parser over a Posts.xml byte stream. Input is consumed in fixed-size
// chunks, so memory use does not grow with the file size.
class PostsReader {
 public:
  explicit PostsReader(std::istream& in, std::size_t chunk_size = 64 * 1024);
  ~PostsReader();
  PostsReader(const PostsReader&) = delete;
  PostsReader& operator=(const PostsReader&) = delete;

  // Next question or answer row; nullopt at end of document. Throws
  // ParseError on malformed XML and IoError on read failure.
  std::optional<RawPost> next();

  const ParseStats& stats() const { return stats_; }

 private:
  struct Impl;
  void feed();
  void on_row(const char** atts);

  std::unique_ptr<Impl> impl_;
  std::deque<RawPost> pending_;
  ParseStats stats_;
};

// Drains the stream through `sink`, returning the counters.
ParseStats parse_posts(std::istream& in, const std::function<void(RawPost&&)>& sink);

// Convenience for small inputs.
std::vector<RawPost> parse_posts(std::istream& in, ParseStats* stats = nullptr);

}  // namespace tbger
