#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tbger/activity.hpp"
#include "tbger/diffusion.hpp"
#include "tbger/sparse_matrix.hpp"
#include "tbger/split.hpp"

namespace tbger {

// ---------------------------------------------------------------------------
// Vote-score baseline

// Floor for users whose mean vote score is not positive.
inline constexpr double kMinSamplingWeight = 1e-6;
inline constexpr int kDefaultScoreTrials = 50;

struct VoteScoreTable {
  std::vector<double> mean_score;  // per user index; 0 for users without answers
  std::vector<double> weights;     // mean_score, floored at kMinSamplingWeight
};

// Mean vote score of each user's answers created before `before`.
VoteScoreTable build_vote_table(std::span<const AnswerEvent> answers, std::uint32_t users,
                                Timestamp before = std::numeric_limits<Timestamp>::max());

struct ScoreBaselineResult {
  std::vector<double> average_rank;  // per user index, 1-based
  Ranking ranking;                   // ascending average rank; score = -average_rank
};

// Draws `trials` permutations of the users, each sampled without replacement
// with probability proportional to weight, and averages the rank each user
// lands on. Deterministic for a fixed seed. All-zero weights sample uniformly.
ScoreBaselineResult score_baseline_rank(const VoteScoreTable& table, const UserIndex& users,
                                        int trials = kDefaultScoreTrials, std::uint64_t seed = 1);

// One weighted permutation of user indices (first = rank 1).
std::vector<std::uint32_t> sample_weighted_permutation(std::span<const double> weights,
                                                       const UserIndex& users,
                                                       std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Matrix factorisation baselines (TAG-MF, t-TAG-MF)

struct MFHyperparameters {
  int latent = 10;
  double learning_rate = 0.01;
  double l2 = 0.01;
  int epochs = 100;
  // Unobserved cells sampled as zeros per epoch, relative to nnz.
  double negative_ratio = 1.0;
  double init_scale = 0.1;

  bool operator==(const MFHyperparameters&) const = default;
};

std::string describe(const MFHyperparameters& hp);

struct MFModel {
  std::uint32_t users = 0;
  std::uint32_t tags = 0;
  MFHyperparameters hyperparameters;
  std::uint64_t seed = 0;
  std::vector<double> user_factors;  // users x latent, row-major
  std::vector<double> tag_factors;   // tags x latent, row-major
  // Objective before training, then after every epoch.
  std::vector<double> epoch_loss;

  int latent() const { return hyperparameters.latent; }
  double predict(std::uint32_t user, std::uint32_t tag) const;

  bool operator==(const MFModel&) const = default;
};

// Called after each epoch with the current model; used for epoch snapshots.
using EpochCallback = std::function<void(int epoch, const MFModel& model)>;

// SGD on squared error over the observed entries plus uniformly sampled
// unobserved entries treated as zero, with L2 weight decay. Throws
// PreconditionError for an empty matrix or latent < 1 and TrainingError
// (naming the hyperparameters) if the loss stops being finite.
MFModel train_tag_mf(const SparseUserTagMatrix& matrix, const MFHyperparameters& hp,
                     std::uint64_t seed, const EpochCallback& on_epoch = {});

// score(i) = sum over tags of dot(user_factors[i], tag_factors[tag]).
ResourceVector mf_score(const MFModel& model, std::span<const std::uint32_t> tags);

// t-TAG-MF factorises the discounted matrix S(t_q).
SparseUserTagMatrix build_t_tag_mf_input(const WindowedActivity& windowed, Timestamp query_time);

// "TBGMFMD" magic, version byte, little-endian header and factors.
void write_model(std::ostream& out, const MFModel& model);
MFModel read_model(std::istream& in);
void save_model(const std::string& path, const MFModel& model);
MFModel load_model(const std::string& path);

}  // namespace tbger
