#include "tbger/baselines.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace tbger {

VoteScoreTable build_vote_table(std::span<const AnswerEvent> answers, std::uint32_t users,
                                Timestamp before) {
  std::vector<double> sum(users, 0.0);
  std::vector<std::int64_t> count(users, 0);
  for (const AnswerEvent& a : answers) {
    if (a.time >= before) continue;
    if (a.user_index >= users) throw PreconditionError("answer user index out of range");
    sum[a.user_index] += static_cast<double>(a.score);
    ++count[a.user_index];
  }
  VoteScoreTable table;
  table.mean_score.resize(users, 0.0);
  table.weights.resize(users, kMinSamplingWeight);
  for (std::uint32_t i = 0; i < users; ++i) {
    if (count[i] > 0) table.mean_score[i] = sum[i] / static_cast<double>(count[i]);
    if (table.mean_score[i] > 0.0) table.weights[i] = table.mean_score[i];
  }
  return table;
}

std::vector<std::uint32_t> sample_weighted_permutation(std::span<const double> weights,
                                                       const UserIndex& users,
                                                       std::mt19937_64& rng) {
  if (weights.size() != users.size()) throw PreconditionError("weights do not match users");
  const bool all_zero = std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; });
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw PreconditionError("weights must be non-negative");
  }

  // Exponential-key sampling: sorting by log(u)/w descending yields the same
  // distribution as repeatedly drawing the next user proportionally to weight
  // among those not yet drawn. Zero-weight users go last.
  struct Keyed {
    double key;
    std::uint32_t index;
  };
  std::vector<Keyed> keyed(weights.size());
  for (std::uint32_t i = 0; i < weights.size(); ++i) {
    // u in (0, 1), never exactly 0.
    const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    const double w = all_zero ? 1.0 : weights[i];
    keyed[i] = {w > 0.0 ? std::log(u) / w : -std::numeric_limits<double>::infinity(), i};
  }
  std::sort(keyed.begin(), keyed.end(), [&](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key > b.key : users.key(a.index) < users.key(b.index);
  });
  std::vector<std::uint32_t> order(keyed.size());
  for (std::size_t r = 0; r < keyed.size(); ++r) order[r] = keyed[r].index;
  return order;
}

ScoreBaselineResult score_baseline_rank(const VoteScoreTable& table, const UserIndex& users,
                                        int trials, std::uint64_t seed) {
  if (trials < 1) throw PreconditionError("trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<double> rank_sum(users.size(), 0.0);
  for (int t = 0; t < trials; ++t) {
    const auto order = sample_weighted_permutation(table.weights, users, rng);
    for (std::size_t r = 0; r < order.size(); ++r) rank_sum[order[r]] += static_cast<double>(r + 1);
  }
  ScoreBaselineResult result;
  result.average_rank.resize(users.size());
  std::vector<double> scores(users.size());
  for (std::uint32_t i = 0; i < users.size(); ++i) {
    result.average_rank[i] = rank_sum[i] / trials;
    scores[i] = -result.average_rank[i];
  }
  result.ranking = rank_users(scores, users);
  return result;
}

std::string describe(const MFHyperparameters& hp) {
  std::ostringstream s;
  s << "latent=" << hp.latent << ", learning_rate=" << hp.learning_rate << ", l2=" << hp.l2
    << ", epochs=" << hp.epochs << ", negative_ratio=" << hp.negative_ratio;
  return s.str();
}

double MFModel::predict(std::uint32_t user, std::uint32_t tag) const {
  const int k = latent();
  const double* p = user_factors.data() + static_cast<std::size_t>(user) * k;
  const double* q = tag_factors.data() + static_cast<std::size_t>(tag) * k;
  double dot = 0.0;
  for (int f = 0; f < k; ++f) dot += p[f] * q[f];
  return dot;
}

namespace {

struct Sample {
  std::uint32_t user;
  std::uint32_t tag;
  double target;
};

double squared_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double objective(const MFModel& model, const std::vector<Sample>& samples) {
  double loss = 0.0;
  for (const Sample& s : samples) {
    const double e = s.target - model.predict(s.user, s.tag);
    loss += e * e;
  }
  return loss + model.hyperparameters.l2 *
                    (squared_norm(model.user_factors) + squared_norm(model.tag_factors));
}

}  // namespace

MFModel train_tag_mf(const SparseUserTagMatrix& matrix, const MFHyperparameters& hp,
                     std::uint64_t seed, const EpochCallback& on_epoch) {
  if (matrix.empty()) throw PreconditionError("cannot factorise an empty activity matrix");
  if (hp.latent < 1) throw PreconditionError("latent dimension must be >= 1");
  if (hp.epochs < 0 || hp.negative_ratio < 0.0 || !(hp.learning_rate > 0.0) || hp.l2 < 0.0) {
    throw PreconditionError("invalid MF hyperparameters: " + describe(hp));
  }

  const int k = hp.latent;
  MFModel model;
  model.users = matrix.rows();
  model.tags = matrix.cols();
  model.hyperparameters = hp;
  model.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> init(0.0, hp.init_scale);
  model.user_factors.resize(static_cast<std::size_t>(model.users) * k);
  model.tag_factors.resize(static_cast<std::size_t>(model.tags) * k);
  for (double& x : model.user_factors) x = init(rng);
  for (double& x : model.tag_factors) x = init(rng);

  std::vector<Sample> observed;
  observed.reserve(matrix.nnz());
  for (const auto& e : matrix.triplets()) observed.push_back({e.row, e.col, e.value});

  const double cells = static_cast<double>(model.users) * static_cast<double>(model.tags);
  const double free_cells = cells - static_cast<double>(matrix.nnz());
  const auto negatives = static_cast<std::size_t>(
      std::min(free_cells, std::round(hp.negative_ratio * static_cast<double>(matrix.nnz()))));
  std::uniform_int_distribution<std::uint32_t> pick_user(0, model.users - 1);
  std::uniform_int_distribution<std::uint32_t> pick_tag(0, model.tags - 1);

  auto draw_epoch = [&] {
    std::vector<Sample> samples = observed;
    std::size_t attempts = 0;
    const std::size_t max_attempts = 50 * negatives + 100;
    std::size_t drawn = 0;
    while (drawn < negatives && attempts++ < max_attempts) {
      const std::uint32_t u = pick_user(rng);
      const std::uint32_t t = pick_tag(rng);
      if (matrix.at(u, t) != 0.0) continue;
      samples.push_back({u, t, 0.0});
      ++drawn;
    }
    std::shuffle(samples.begin(), samples.end(), rng);
    return samples;
  };

  auto diverged = [&](double loss) {
    return TrainingError("TAG-MF diverged (loss " + std::to_string(loss) + ") with " +
                         describe(hp));
  };

  std::vector<Sample> samples = draw_epoch();
  model.epoch_loss.push_back(objective(model, samples));
  std::vector<double> p_old(k);
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    if (epoch > 1) samples = draw_epoch();
    for (const Sample& s : samples) {
      double* p = model.user_factors.data() + static_cast<std::size_t>(s.user) * k;
      double* q = model.tag_factors.data() + static_cast<std::size_t>(s.tag) * k;
      double pred = 0.0;
      for (int f = 0; f < k; ++f) pred += p[f] * q[f];
      const double e = s.target - pred;
      std::copy(p, p + k, p_old.begin());
      for (int f = 0; f < k; ++f) {
        p[f] += hp.learning_rate * (e * q[f] - hp.l2 * p[f]);
        q[f] += hp.learning_rate * (e * p_old[f] - hp.l2 * q[f]);
      }
    }
    const double loss = objective(model, samples);
    if (!std::isfinite(loss)) throw diverged(loss);
    model.epoch_loss.push_back(loss);
    if (on_epoch) on_epoch(epoch, model);
  }
  return model;
}

ResourceVector mf_score(const MFModel& model, std::span<const std::uint32_t> tags) {
  const int k = model.latent();
  std::vector<double> query(k, 0.0);
  for (std::uint32_t t : tags) {
    if (t >= model.tags) throw PreconditionError("tag index out of range");
    const double* q = model.tag_factors.data() + static_cast<std::size_t>(t) * k;
    for (int f = 0; f < k; ++f) query[f] += q[f];
  }
  ResourceVector scores(model.users, 0.0);
  if (tags.empty()) return scores;
  for (std::uint32_t i = 0; i < model.users; ++i) {
    const double* p = model.user_factors.data() + static_cast<std::size_t>(i) * k;
    double dot = 0.0;
    for (int f = 0; f < k; ++f) dot += p[f] * query[f];
    scores[i] = dot;
  }
  return scores;
}

SparseUserTagMatrix build_t_tag_mf_input(const WindowedActivity& windowed, Timestamp query_time) {
  return temporal_activity(windowed, query_time).matrix;
}

namespace {

constexpr char kModelMagic[7] = {'T', 'B', 'G', 'M', 'F', 'M', 'D'};
constexpr std::uint8_t kModelVersion = 1;

void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, bytes);
}

void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v), 8); }

std::uint64_t get_le(std::istream& in, int bytes) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), bytes)) throw ParseError("truncated model file");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_le(in, 8)); }

}  // namespace

void write_model(std::ostream& out, const MFModel& m) {
  out.write(kModelMagic, sizeof kModelMagic);
  put_le(out, kModelVersion, 1);
  put_le(out, m.users, 4);
  put_le(out, m.tags, 4);
  put_le(out, static_cast<std::uint32_t>(m.hyperparameters.latent), 4);
  put_le(out, static_cast<std::uint32_t>(m.hyperparameters.epochs), 4);
  put_f64(out, m.hyperparameters.learning_rate);
  put_f64(out, m.hyperparameters.l2);
  put_f64(out, m.hyperparameters.negative_ratio);
  put_f64(out, m.hyperparameters.init_scale);
  put_le(out, m.seed, 8);
  put_le(out, m.epoch_loss.size(), 4);
  for (double v : m.epoch_loss) put_f64(out, v);
  for (double v : m.user_factors) put_f64(out, v);
  for (double v : m.tag_factors) put_f64(out, v);
}

MFModel read_model(std::istream& in) {
  char magic[sizeof kModelMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kModelMagic)) {
    throw ParseError("not a model snapshot (bad magic)");
  }
  if (get_le(in, 1) != kModelVersion) throw ParseError("unsupported model version");
  MFModel m;
  m.users = static_cast<std::uint32_t>(get_le(in, 4));
  m.tags = static_cast<std::uint32_t>(get_le(in, 4));
  m.hyperparameters.latent = static_cast<int>(get_le(in, 4));
  m.hyperparameters.epochs = static_cast<int>(get_le(in, 4));
  m.hyperparameters.learning_rate = get_f64(in);
  m.hyperparameters.l2 = get_f64(in);
  m.hyperparameters.negative_ratio = get_f64(in);
  m.hyperparameters.init_scale = get_f64(in);
  m.seed = get_le(in, 8);
  if (m.hyperparameters.latent < 1) throw ParseError("model latent dimension must be >= 1");
  const auto losses = get_le(in, 4);
  for (std::uint64_t i = 0; i < losses; ++i) m.epoch_loss.push_back(get_f64(in));
  const int k = m.hyperparameters.latent;
  m.user_factors.resize(static_cast<std::size_t>(m.users) * k);
  m.tag_factors.resize(static_cast<std::size_t>(m.tags) * k);
  for (double& v : m.user_factors) v = get_f64(in);
  for (double& v : m.tag_factors) v = get_f64(in);
  return m;
}

void save_model(const std::string& path, const MFModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_model(out, model);
  if (!out) throw IoError("write failed: " + path);
}

MFModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path);
  return read_model(in);
}

}  // namespace tbger
