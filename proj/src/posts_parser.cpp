#include "tbger/posts_parser.hpp"

#include <expat.h>

#include <charconv>
#include <cstring>
#include <istream>

namespace tbger {

namespace {

template <typename Int>
std::optional<Int> parse_int(const char* text) {
  Int value{};
  const char* last = text + std::strlen(text);
  auto [ptr, ec] = std::from_chars(text, last, value);
  if (ec != std::errc() || ptr != last || ptr == text) return std::nullopt;
  return value;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace

std::vector<std::string> split_tags(std::string_view value) {
  std::string text(value);
  // Expat already decoded one level of entities; dumps re-exported by other
  // tools sometimes carry a second one.
  if (text.find('&') != std::string::npos) {
    replace_all(text, "&lt;", "<");
    replace_all(text, "&gt;", ">");
    replace_all(text, "&amp;", "&");
  }

  std::vector<std::string> tags;
  auto emit = [&](std::string_view tag) {
    if (!tag.empty()) tags.emplace_back(tag);
  };

  if (text.find('<') != std::string::npos) {
    std::size_t pos = 0;
    while ((pos = text.find('<', pos)) != std::string::npos) {
      const std::size_t end = text.find('>', pos + 1);
      if (end == std::string::npos) break;
      emit(std::string_view(text).substr(pos + 1, end - pos - 1));
      pos = end + 1;
    }
  } else {
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('|', start);
      if (end == std::string::npos) end = text.size();
      emit(std::string_view(text).substr(start, end - start));
      start = end + 1;
    }
  }
  return tags;
}

struct PostsReader::Impl {
  XML_Parser parser = nullptr;
  std::istream* in = nullptr;
  std::size_t chunk_size = 0;
  std::vector<char> buffer;
  bool finished = false;
  int depth = 0;
  bool root_checked = false;
  std::string root_error;
  PostsReader* owner = nullptr;

  ~Impl() {
    if (parser != nullptr) XML_ParserFree(parser);
  }

  static void XMLCALL on_start(void* user, const XML_Char* name, const XML_Char** atts) {
    auto* self = static_cast<Impl*>(user);
    ++self->depth;
    if (self->depth == 1) {
      self->root_checked = true;
      if (std::strcmp(name, "posts") != 0) {
        self->root_error = std::string("unexpected root element <") + name + ">";
        XML_StopParser(self->parser, XML_FALSE);
      }
      return;
    }
    if (self->depth == 2 && std::strcmp(name, "row") == 0) self->owner->on_row(atts);
  }

  static void XMLCALL on_end(void* user, const XML_Char*) { --static_cast<Impl*>(user)->depth; }
};

PostsReader::PostsReader(std::istream& in, std::size_t chunk_size)
    : impl_(std::make_unique<Impl>()) {
  impl_->in = &in;
  impl_->chunk_size = chunk_size;
  impl_->buffer.resize(chunk_size);
  impl_->owner = this;
  impl_->parser = XML_ParserCreate("UTF-8");
  if (impl_->parser == nullptr) throw Error("cannot allocate XML parser");
  XML_SetUserData(impl_->parser, impl_.get());
  XML_SetElementHandler(impl_->parser, &Impl::on_start, &Impl::on_end);
}

PostsReader::~PostsReader() = default;

void PostsReader::on_row(const char** atts) {
  ++stats_.rows_seen;
  const char* id = nullptr;
  const char* type = nullptr;
  const char* created = nullptr;
  const char* score = nullptr;
  const char* owner = nullptr;
  const char* tags = nullptr;
  const char* accepted = nullptr;
  const char* parent = nullptr;
  for (const char** a = atts; *a != nullptr; a += 2) {
    const char* key = a[0];
    const char* value = a[1];
    if (std::strcmp(key, "Id") == 0) id = value;
    else if (std::strcmp(key, "PostTypeId") == 0) type = value;
    else if (std::strcmp(key, "CreationDate") == 0) created = value;
    else if (std::strcmp(key, "Score") == 0) score = value;
    else if (std::strcmp(key, "OwnerUserId") == 0) owner = value;
    else if (std::strcmp(key, "Tags") == 0) tags = value;
    else if (std::strcmp(key, "AcceptedAnswerId") == 0) accepted = value;
    else if (std::strcmp(key, "ParentId") == 0) parent = value;
  }

  if (type != nullptr) {
    const auto t = parse_int<int>(type);
    if (t && *t != 1 && *t != 2) {
      ++stats_.rows_skipped_other_type;
      return;
    }
  }
  if (id == nullptr || type == nullptr || created == nullptr || score == nullptr) {
    ++stats_.rows_rejected_missing_attribute;
    return;
  }

  RawPost post;
  const auto post_id = parse_int<PostId>(id);
  const auto post_type = parse_int<int>(type);
  const auto date = parse_timestamp(created);
  const auto post_score = parse_int<std::int64_t>(score);
  if (!post_id || *post_id <= 0 || !post_type || !date || !post_score) {
    ++stats_.rows_rejected_invalid;
    return;
  }
  post.id = *post_id;
  post.post_type = static_cast<PostType>(*post_type);
  post.creation_date = *date;
  post.score = *post_score;

  auto optional_id = [&](const char* text, std::optional<std::int64_t>& out) {
    if (text == nullptr) return true;
    const auto v = parse_int<std::int64_t>(text);
    // OwnerUserId="-1" is the Community bot; treat as no owner.
    if (!v) return false;
    if (*v > 0) out = *v;
    return true;
  };
  bool ok = optional_id(owner, post.owner_user_id);
  if (post.post_type == PostType::question) {
    ok = ok && parent == nullptr && optional_id(accepted, post.accepted_answer_id);
    if (tags != nullptr) {
      auto list = split_tags(tags);
      if (list.empty() || list.size() > kMaxTagsPerQuestion) ok = false;
      post.tags = std::move(list);
    }
  } else {
    ok = ok && tags == nullptr && accepted == nullptr && optional_id(parent, post.parent_id);
  }
  if (!ok) {
    ++stats_.rows_rejected_invalid;
    return;
  }
  ++stats_.rows_emitted;
  pending_.push_back(std::move(post));
}

void PostsReader::feed() {
  Impl& im = *impl_;
  im.in->read(im.buffer.data(), static_cast<std::streamsize>(im.chunk_size));
  const std::streamsize got = im.in->gcount();
  if (im.in->bad()) throw IoError("read error on Posts.xml stream");
  const bool last = got < static_cast<std::streamsize>(im.chunk_size);
  if (XML_Parse(im.parser, im.buffer.data(), static_cast<int>(got), last ? XML_TRUE : XML_FALSE) ==
      XML_STATUS_ERROR) {
    const auto offset = static_cast<std::int64_t>(XML_GetCurrentByteIndex(im.parser));
    if (!im.root_error.empty()) throw ParseError(im.root_error, offset);
    throw ParseError(std::string("malformed XML: ") + XML_ErrorString(XML_GetErrorCode(im.parser)),
                     offset);
  }
  if (last) im.finished = true;
}

std::optional<RawPost> PostsReader::next() {
  while (pending_.empty() && !impl_->finished) feed();
  if (pending_.empty()) return std::nullopt;
  RawPost post = std::move(pending_.front());
  pending_.pop_front();
  return post;
}

ParseStats parse_posts(std::istream& in, const std::function<void(RawPost&&)>& sink) {
  PostsReader reader(in);
  while (auto post = reader.next()) sink(std::move(*post));
  return reader.stats();
}

std::vector<RawPost> parse_posts(std::istream& in, ParseStats* stats) {
  std::vector<RawPost> posts;
  const ParseStats s = parse_posts(in, [&](RawPost&& p) { posts.push_back(std::move(p)); });
  if (stats != nullptr) *stats = s;
  return posts;
}

}  // namespace tbger
