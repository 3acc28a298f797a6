#include "tbger/activity.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace tbger {

double activity_contribution(int question_tag_count) {
  if (question_tag_count < 1 || question_tag_count > static_cast<int>(kMaxTagsPerQuestion)) {
    throw PreconditionError("a question carries 1 to 5 tags, got " +
                            std::to_string(question_tag_count));
  }
  return 1.0 / static_cast<double>(question_tag_count);
}

double hyperbolic_discount(int delta) {
  if (delta < 1) throw PreconditionError("window ordinal must be >= 1");
  return 1.0 / (1.0 + static_cast<double>(delta));
}

int window_ordinal(Timestamp answer_time, Timestamp query_time, Duration window_length) {
  if (window_length <= 0) throw PreconditionError("window length must be positive");
  if (answer_time >= query_time) {
    throw PreconditionError("activity at " + format_timestamp(answer_time) +
                            " is not before query time " + format_timestamp(query_time));
  }
  return static_cast<int>((query_time - answer_time) / window_length) + 1;
}

WindowedActivity build_windowed_activity(std::span<const TrainingRecord> records,
                                         std::uint32_t users, std::uint32_t tags,
                                         Duration window_length, Timestamp query_time,
                                         Timestamp origin) {
  WindowedActivity w;
  w.users = users;
  w.tags = tags;
  w.window_length = window_length;
  w.origin = origin;
  w.query_time = query_time;

  std::map<int, std::vector<SparseUserTagMatrix::Entry>> by_window;
  for (const TrainingRecord& r : records) {
    const int delta = window_ordinal(r.answer_time, query_time, window_length);
    if (r.tag_indices.empty()) continue;
    const double share = activity_contribution(static_cast<int>(r.tag_indices.size()));
    auto& entries = by_window[delta];
    for (std::uint32_t tag : r.tag_indices) entries.push_back({r.answerer_index, tag, share});
  }
  for (auto& [delta, entries] : by_window) {
    w.windows.emplace_back(delta, SparseUserTagMatrix::from_triplets(users, tags, std::move(entries)));
  }
  return w;
}

WindowedActivity rebase(const WindowedActivity& windowed, Timestamp query_time) {
  if (query_time == windowed.query_time) return windowed;
  const Duration gap = query_time - windowed.query_time;
  if (gap < 0 || gap % windowed.window_length != 0) {
    throw PreconditionError("cannot rebase windows to " + format_timestamp(query_time) +
                            ": not a whole number of windows after " +
                            format_timestamp(windowed.query_time));
  }
  const int shift = static_cast<int>(gap / windowed.window_length);
  WindowedActivity out = windowed;
  out.query_time = query_time;
  for (auto& [delta, m] : out.windows) delta += shift;
  return out;
}

TemporalActivityMatrix temporal_activity(const WindowedActivity& windowed, Timestamp query_time) {
  const WindowedActivity& w =
      query_time == windowed.query_time ? windowed : rebase(windowed, query_time);
  std::vector<SparseUserTagMatrix::Entry> terms;
  for (const auto& [delta, m] : w.windows) {
    if (m.rows() != w.users || m.cols() != w.tags) {
      throw Error("window matrix dimensions do not match the activity header");
    }
    const double phi = hyperbolic_discount(delta);
    for (const auto& e : m.triplets()) terms.push_back({e.row, e.col, phi * e.value});
  }
  // from_triplets sums each cell in input order, i.e. ascending delta.
  return {SparseUserTagMatrix::from_triplets(w.users, w.tags, std::move(terms)), query_time};
}

SparseUserTagMatrix total_activity(const WindowedActivity& windowed) {
  std::vector<SparseUserTagMatrix::Entry> terms;
  for (const auto& [delta, m] : windowed.windows) {
    const auto t = m.triplets();
    terms.insert(terms.end(), t.begin(), t.end());
  }
  return SparseUserTagMatrix::from_triplets(windowed.users, windowed.tags, std::move(terms));
}

namespace {

constexpr char kSnapshotMagic[7] = {'T', 'B', 'G', 'W', 'A', 'C', 'T'};
constexpr std::uint8_t kSnapshotVersion = 1;

void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, bytes);
}

std::uint64_t get_le(std::istream& in, int bytes) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), bytes)) throw ParseError("truncated snapshot");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_snapshot(std::ostream& out, const WindowedActivity& w) {
  out.write(kSnapshotMagic, sizeof kSnapshotMagic);
  put_le(out, kSnapshotVersion, 1);
  put_le(out, w.users, 4);
  put_le(out, w.tags, 4);
  put_le(out, static_cast<std::uint64_t>(w.window_length), 8);
  put_le(out, static_cast<std::uint64_t>(w.origin), 8);
  put_le(out, static_cast<std::uint64_t>(w.query_time), 8);
  put_le(out, static_cast<std::uint32_t>(w.total_windows()), 4);
  put_le(out, w.windows.size(), 4);
  for (const auto& [delta, m] : w.windows) {
    put_le(out, static_cast<std::uint32_t>(delta), 4);
    put_le(out, m.nnz(), 8);
    for (const auto& e : m.triplets()) {
      put_le(out, e.row, 4);
      put_le(out, e.col, 4);
      put_le(out, std::bit_cast<std::uint64_t>(e.value), 8);
    }
  }
}

WindowedActivity read_snapshot(std::istream& in) {
  char magic[sizeof kSnapshotMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kSnapshotMagic)) {
    throw ParseError("not an activity snapshot (bad magic)");
  }
  if (get_le(in, 1) != kSnapshotVersion) throw ParseError("unsupported snapshot version");
  WindowedActivity w;
  w.users = static_cast<std::uint32_t>(get_le(in, 4));
  w.tags = static_cast<std::uint32_t>(get_le(in, 4));
  w.window_length = static_cast<Duration>(get_le(in, 8));
  w.origin = static_cast<Timestamp>(get_le(in, 8));
  w.query_time = static_cast<Timestamp>(get_le(in, 8));
  const auto total = static_cast<int>(get_le(in, 4));
  const auto count = get_le(in, 4);
  int previous = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto delta = static_cast<int>(get_le(in, 4));
    if (delta <= previous) throw ParseError("snapshot windows out of order");
    previous = delta;
    const auto nnz = get_le(in, 8);
    std::vector<SparseUserTagMatrix::Entry> entries;
    entries.reserve(nnz);
    for (std::uint64_t k = 0; k < nnz; ++k) {
      SparseUserTagMatrix::Entry e;
      e.row = static_cast<std::uint32_t>(get_le(in, 4));
      e.col = static_cast<std::uint32_t>(get_le(in, 4));
      e.value = std::bit_cast<double>(get_le(in, 8));
      entries.push_back(e);
    }
    try {
      w.windows.emplace_back(delta, SparseUserTagMatrix::from_triplets(w.users, w.tags, std::move(entries)));
    } catch (const PreconditionError& e) {
      throw ParseError(std::string("corrupt snapshot window: ") + e.what());
    }
  }
  if (w.total_windows() != total) throw ParseError("snapshot window count mismatch");
  return w;
}

void save_snapshot(const std::string& path, const WindowedActivity& windowed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_snapshot(out, windowed);
  if (!out) throw IoError("write failed: " + path);
}

WindowedActivity load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open snapshot " + path);
  return read_snapshot(in);
}

}  // namespace tbger
