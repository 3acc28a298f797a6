#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tbger/common.hpp"
#include "tbger/sparse_matrix.hpp"
#include "tbger/split.hpp"

namespace tbger {

inline constexpr Duration kDefaultWindowLength = 30 * kSecondsPerDay;

// Share of one answer credited to each tag of the answered question.
// Requires 1 <= question_tag_count <= 5.
double activity_contribution(int question_tag_count);

// Hyperbolic kernel 1 / (1 + delta) for delta >= 1.
double hyperbolic_discount(int delta);

// Number of windows between an answer and the query time, counted backwards
// from t_q: floor((t_q - t) / window_length) + 1. Requires t < t_q.
int window_ordinal(Timestamp answer_time, Timestamp query_time, Duration window_length);

// Per-window activity matrices S_delta, delta = 1 being the most recent
// window before the query time.
struct WindowedActivity {
  std::uint32_t users = 0;
  std::uint32_t tags = 0;
  Duration window_length = kDefaultWindowLength;
  Timestamp origin = 0;      // t_1, first post of the site
  Timestamp query_time = 0;  // t_q the ordinals are counted from
  // Ascending by ordinal; only non-empty windows are stored.
  std::vector<std::pair<int, SparseUserTagMatrix>> windows;

  // Delta, the largest ordinal present (0 when empty).
  int total_windows() const { return windows.empty() ? 0 : windows.back().first; }

  bool operator==(const WindowedActivity&) const = default;
};

// Groups records by window and sums their per-tag contributions. Throws
// PreconditionError for any record at or after t_q.
WindowedActivity build_windowed_activity(std::span<const TrainingRecord> records,
                                         std::uint32_t users, std::uint32_t tags,
                                         Duration window_length, Timestamp query_time,
                                         Timestamp origin = 0);

// Shifts ordinals to a later query time. The gap must be a whole number of
// windows.
WindowedActivity rebase(const WindowedActivity& windowed, Timestamp query_time);

// S(t_q): discounted aggregate that doubles as the weighted bipartite
// adjacency.
struct TemporalActivityMatrix {
  SparseUserTagMatrix matrix;
  Timestamp query_time = 0;
};

// Sum over windows of hyperbolic_discount(delta) * S_delta, accumulated per
// cell in ascending delta. A different t_q than the one the windows were
// built for is handled through rebase().
TemporalActivityMatrix temporal_activity(const WindowedActivity& windowed, Timestamp query_time);

// Undiscounted sum of all windows (plain user-tag activity matrix S).
SparseUserTagMatrix total_activity(const WindowedActivity& windowed);

// Binary snapshot: "TBGWACT" magic, version byte, little-endian header
// (M, N, window_length, origin, query_time, window count) and per-window
// (ordinal, nnz, triplets).
void write_snapshot(std::ostream& out, const WindowedActivity& windowed);
WindowedActivity read_snapshot(std::istream& in);
void save_snapshot(const std::string& path, const WindowedActivity& windowed);
WindowedActivity load_snapshot(const std::string& path);

}  // namespace tbger
