#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tbger/activity.hpp"
#include "tbger/sparse_matrix.hpp"
#include "tbger/split.hpp"

namespace tbger {

// How k(u) and k(v) are measured on the weighted graph.
enum class DegreeMode {
  weighted,    // row / column sums of the adjacency weights
  edge_count,  // number of incident edges, as in the unweighted graph
};

const char* to_string(DegreeMode mode);
DegreeMode parse_degree_mode(const std::string& text);

// Resource amounts over users or over tags.
using ResourceVector = std::vector<double>;

// Users on one side, tags on the other, edge weights a(i, tag) taken from
// the temporal activity matrix. Immutable after construction.
class BipartiteGraph {
 public:
  explicit BipartiteGraph(SparseUserTagMatrix adjacency, DegreeMode mode = DegreeMode::weighted);
  explicit BipartiteGraph(const TemporalActivityMatrix& activity,
                          DegreeMode mode = DegreeMode::weighted)
      : BipartiteGraph(activity.matrix, mode) {}

  std::uint32_t users() const { return adjacency_.rows(); }
  std::uint32_t tags() const { return adjacency_.cols(); }
  const SparseUserTagMatrix& adjacency() const { return adjacency_; }
  // Transposed adjacency: one row per tag.
  const SparseUserTagMatrix& by_tag() const { return by_tag_; }
  const std::vector<double>& user_degrees() const { return user_degrees_; }
  const std::vector<double>& tag_degrees() const { return tag_degrees_; }
  DegreeMode degree_mode() const { return mode_; }

 private:
  SparseUserTagMatrix adjacency_;
  SparseUserTagMatrix by_tag_;
  std::vector<double> user_degrees_;
  std::vector<double> tag_degrees_;
  DegreeMode mode_;
};

// First step: every user spreads its resource over its tags in proportion to
// the edge weights, f(tag) = sum_i a(i, tag) f(i) / k(i). Users of degree 0
// contribute nothing.
ResourceVector diffuse_to_tags(const BipartiteGraph& graph, std::span<const double> user_resource);

// Second step: f'(i) = sum_tag a(i, tag) f(tag) / k(tag). Tags of degree 0
// contribute nothing.
ResourceVector diffuse_to_users(const BipartiteGraph& graph, std::span<const double> tag_resource);

// Expertise of every user for a question with the given (known) tags: the
// sum of the question's columns of W * S. Computed as two sparse mat-vecs on
// v(i) = sum over the tags of S(i, tag), never forming W. An empty tag list
// gives the all-zero vector; callers flag such questions as unscorable.
ResourceVector score_question(const BipartiteGraph& graph, std::span<const std::uint32_t> tags);

struct DenseMatrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<double> data;  // row-major

  double operator()(std::uint32_t r, std::uint32_t c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  double& operator()(std::uint32_t r, std::uint32_t c) {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
};

inline constexpr std::uint32_t kMaterializeCap = 2000;

// Dense resource-allocation operator, w(i, b) = 1/k(b) sum_tag a(i,tag) a(b,tag) / k(tag).
// Diagnostic only; refuses (PreconditionError) above `max_users` users.
DenseMatrix materialize_W(const BipartiteGraph& graph, std::uint32_t max_users = kMaterializeCap);

// CSV of W with external user ids as row/column labels.
void write_W_csv(std::ostream& out, const BipartiteGraph& graph, const UserIndex& users,
                 std::uint32_t max_users = kMaterializeCap);

struct RankedUser {
  std::uint32_t user_index = 0;
  UserId user_id = 0;
  double score = 0.0;

  bool operator==(const RankedUser&) const = default;
};

// Users by descending score, ties by ascending external id.
struct Ranking {
  std::optional<PostId> question_id;
  std::vector<RankedUser> entries;
};

// Ranks every indexed user; `scores` is indexed like `users`.
Ranking rank_users(std::span<const double> scores, const UserIndex& users);

// Ranks only the given subset of user indices.
Ranking rank_users(std::span<const double> scores, const UserIndex& users,
                   std::span<const std::uint32_t> candidates);

// 1-based position `user_index` would take in rank_users(scores, users),
// without sorting.
std::uint32_t rank_of(std::span<const double> scores, const UserIndex& users,
                      std::uint32_t user_index);

}  // namespace tbger
