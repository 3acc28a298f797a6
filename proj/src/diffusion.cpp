#include "tbger/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace tbger {

namespace {

void check_resource(std::span<const double> values, std::size_t expected, const char* what) {
  if (values.size() != expected) {
    throw PreconditionError(std::string(what) + " has length " + std::to_string(values.size()) +
                            ", expected " + std::to_string(expected));
  }
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw PreconditionError(std::string(what) + " must be finite and non-negative");
    }
  }
}

void check_scores(std::span<const double> scores, const UserIndex& users) {
  if (scores.size() != users.size()) throw PreconditionError("score vector does not match users");
  for (double s : scores) {
    if (!std::isfinite(s)) throw PreconditionError("scores must be finite");
  }
}

}  // namespace

const char* to_string(DegreeMode mode) {
  return mode == DegreeMode::weighted ? "weighted" : "edge-count";
}

DegreeMode parse_degree_mode(const std::string& text) {
  if (text == "weighted") return DegreeMode::weighted;
  if (text == "edge-count") return DegreeMode::edge_count;
  throw ConfigError("unknown degree mode '" + text + "' (expected weighted or edge-count)");
}

BipartiteGraph::BipartiteGraph(SparseUserTagMatrix adjacency, DegreeMode mode)
    : adjacency_(std::move(adjacency)), by_tag_(adjacency_.transposed()), mode_(mode) {
  if (mode == DegreeMode::weighted) {
    user_degrees_ = adjacency_.row_sums();
    tag_degrees_ = adjacency_.col_sums();
  } else {
    user_degrees_ = adjacency_.row_counts();
    tag_degrees_ = adjacency_.col_counts();
  }
}

ResourceVector diffuse_to_tags(const BipartiteGraph& graph, std::span<const double> f) {
  check_resource(f, graph.users(), "user resource");
  const auto& a = graph.adjacency();
  const auto& k = graph.user_degrees();
  ResourceVector out(graph.tags(), 0.0);
  for (std::uint32_t i = 0; i < graph.users(); ++i) {
    if (k[i] <= 0.0 || f[i] == 0.0) continue;
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t j = 0; j < cols.size(); ++j) out[cols[j]] += vals[j] * f[i] / k[i];
  }
  return out;
}

ResourceVector diffuse_to_users(const BipartiteGraph& graph, std::span<const double> g) {
  check_resource(g, graph.tags(), "tag resource");
  const auto& a = graph.adjacency();
  const auto& k = graph.tag_degrees();
  ResourceVector out(graph.users(), 0.0);
  for (std::uint32_t i = 0; i < graph.users(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    double sum = 0.0;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const std::uint32_t t = cols[j];
      if (k[t] > 0.0) sum += vals[j] * g[t] / k[t];
    }
    out[i] = sum;
  }
  return out;
}

ResourceVector score_question(const BipartiteGraph& graph, std::span<const std::uint32_t> tags) {
  ResourceVector v(graph.users(), 0.0);
  const auto& columns = graph.by_tag();
  for (std::uint32_t t : tags) {
    if (t >= graph.tags()) throw PreconditionError("tag index out of range");
    const auto users = columns.row_cols(t);
    const auto vals = columns.row_values(t);
    for (std::size_t j = 0; j < users.size(); ++j) v[users[j]] += vals[j];
  }
  if (tags.empty()) return v;
  return diffuse_to_users(graph, diffuse_to_tags(graph, v));
}

DenseMatrix materialize_W(const BipartiteGraph& graph, std::uint32_t max_users) {
  const std::uint32_t m = graph.users();
  if (m > max_users) {
    throw PreconditionError("refusing to materialize W for " + std::to_string(m) +
                            " users (cap " + std::to_string(max_users) + ")");
  }
  DenseMatrix w{m, m, std::vector<double>(static_cast<std::size_t>(m) * m, 0.0)};
  const auto& columns = graph.by_tag();
  const auto& kt = graph.tag_degrees();
  for (std::uint32_t t = 0; t < graph.tags(); ++t) {
    if (kt[t] <= 0.0) continue;
    const auto users = columns.row_cols(t);
    const auto vals = columns.row_values(t);
    for (std::size_t x = 0; x < users.size(); ++x) {
      for (std::size_t y = 0; y < users.size(); ++y) {
        w(users[x], users[y]) += vals[x] * vals[y] / kt[t];
      }
    }
  }
  const auto& ku = graph.user_degrees();
  for (std::uint32_t i = 0; i < m; ++i) {
    for (std::uint32_t b = 0; b < m; ++b) w(i, b) = ku[b] > 0.0 ? w(i, b) / ku[b] : 0.0;
  }
  return w;
}

void write_W_csv(std::ostream& out, const BipartiteGraph& graph, const UserIndex& users,
                 std::uint32_t max_users) {
  if (users.size() != graph.users()) throw PreconditionError("user index does not match graph");
  const DenseMatrix w = materialize_W(graph, max_users);
  out << "user";
  for (std::uint32_t b = 0; b < w.cols; ++b) out << ',' << users.key(b);
  out << '\n';
  const auto old_precision = out.precision(17);
  for (std::uint32_t i = 0; i < w.rows; ++i) {
    out << users.key(i);
    for (std::uint32_t b = 0; b < w.cols; ++b) out << ',' << w(i, b);
    out << '\n';
  }
  out.precision(old_precision);
}

Ranking rank_users(std::span<const double> scores, const UserIndex& users,
                   std::span<const std::uint32_t> candidates) {
  check_scores(scores, users);
  Ranking ranking;
  ranking.entries.reserve(candidates.size());
  for (std::uint32_t i : candidates) {
    if (i >= users.size()) throw PreconditionError("candidate index out of range");
    ranking.entries.push_back({i, users.key(i), scores[i]});
  }
  std::sort(ranking.entries.begin(), ranking.entries.end(),
            [](const RankedUser& x, const RankedUser& y) {
              return x.score != y.score ? x.score > y.score : x.user_id < y.user_id;
            });
  return ranking;
}

Ranking rank_users(std::span<const double> scores, const UserIndex& users) {
  std::vector<std::uint32_t> all(users.size());
  for (std::uint32_t i = 0; i < users.size(); ++i) all[i] = i;
  return rank_users(scores, users, all);
}

std::uint32_t rank_of(std::span<const double> scores, const UserIndex& users,
                      std::uint32_t user_index) {
  check_scores(scores, users);
  if (user_index >= users.size()) throw PreconditionError("user index out of range");
  const double s = scores[user_index];
  const UserId id = users.key(user_index);
  std::uint32_t rank = 1;
  for (std::uint32_t j = 0; j < users.size(); ++j) {
    if (scores[j] > s || (scores[j] == s && users.key(j) < id)) ++rank;
  }
  return rank;
}

}  // namespace tbger
