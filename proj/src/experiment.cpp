#include "tbger/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>

namespace tbger {

const char* to_string(Method method) {
  switch (method) {
    case Method::t_bger: return "t-bger";
    case Method::score: return "score";
    case Method::tag_mf: return "tag-mf";
    case Method::t_tag_mf: return "t-tag-mf";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : all_methods()) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + name + "' (expected t-bger, score, tag-mf or t-tag-mf)");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::t_bger, Method::score, Method::tag_mf,
                                           Method::t_tag_mf};
  return methods;
}

void ExperimentConfig::validate() const {
  if (window_days < 1) throw ConfigError("window_days must be positive");
  if (min_answers < 1) throw ConfigError("min_answers must be at least 1");
  if (cold_threshold < 1) throw ConfigError("cold_threshold must be at least 1");
  if (score_trials < 1) throw ConfigError("score_trials must be at least 1");
  if (mf.latent < 1) throw ConfigError("mf latent dimension must be at least 1");
  if (mf.learning_rates.empty() || mf.l2.empty() || mf.epochs.empty()) {
    throw ConfigError("mf search space must not be empty");
  }
  for (int e : mf.epochs) {
    if (e < 1) throw ConfigError("mf epochs must be positive");
  }
  ratios.validate();
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& c, bool include_paths) {
  nlohmann::ordered_json j;
  j["site"] = c.site;
  j["window_days"] = c.window_days;
  j["min_answers"] = c.min_answers;
  j["cold_threshold"] = c.cold_threshold;
  j["cold_start"] = c.cold_start;
  j["method"] = c.method;
  j["seed"] = c.seed;
  j["degree_mode"] = to_string(c.degree_mode);
  j["score_trials"] = c.score_trials;
  j["ratios"] = {c.ratios.train, c.ratios.validation, c.ratios.test};
  j["mf"] = {{"latent", c.mf.latent},
             {"negative_ratio", c.mf.negative_ratio},
             {"learning_rates", c.mf.learning_rates},
             {"l2", c.mf.l2},
             {"epochs", c.mf.epochs}};
  if (include_paths) {
    j["dump_path"] = c.dump_path;
    j["corpus_path"] = c.corpus_path;
    j["manifest_path"] = c.manifest_path;
    j["out_dir"] = c.out_dir;
  }
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "site") c.site = value.get<std::string>();
      else if (key == "window_days") c.window_days = value.get<std::int64_t>();
      else if (key == "min_answers") c.min_answers = value.get<int>();
      else if (key == "cold_threshold") c.cold_threshold = value.get<int>();
      else if (key == "cold_start") c.cold_start = value.get<bool>();
      else if (key == "method") c.method = value.get<std::string>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "degree_mode") c.degree_mode = parse_degree_mode(value.get<std::string>());
      else if (key == "score_trials") c.score_trials = value.get<int>();
      else if (key == "ratios") {
        const auto r = value.get<std::vector<double>>();
        if (r.size() != 3) throw ConfigError("ratios must have three entries");
        c.ratios = {r[0], r[1], r[2]};
      } else if (key == "mf") {
        for (const auto& [k, v] : value.items()) {
          if (k == "latent") c.mf.latent = v.get<int>();
          else if (k == "negative_ratio") c.mf.negative_ratio = v.get<double>();
          else if (k == "learning_rates") c.mf.learning_rates = v.get<std::vector<double>>();
          else if (k == "l2") c.mf.l2 = v.get<std::vector<double>>();
          else if (k == "epochs") c.mf.epochs = v.get<std::vector<int>>();
          else throw ConfigError("unknown config key 'mf." + k + "'");
        }
      } else if (key == "dump_path") c.dump_path = value.get<std::string>();
      else if (key == "corpus_path") c.corpus_path = value.get<std::string>();
      else if (key == "manifest_path") c.manifest_path = value.get<std::string>();
      else if (key == "out_dir") c.out_dir = value.get<std::string>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  try {
    return config_from_json(nlohmann::json::parse(in), std::move(base));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config file " + path + ": " + e.what());
  }
}

std::string config_fingerprint(const ExperimentConfig& config) {
  return hex64(fnv1a64(config_to_json(config, false).dump()));
}

Timestamp block_start(Timestamp t, Timestamp origin, Duration window_length) {
  if (window_length <= 0) throw PreconditionError("window length must be positive");
  Duration offset = t - origin;
  Duration blocks = offset / window_length;
  if (offset < 0 && offset % window_length != 0) --blocks;
  return origin + blocks * window_length;
}

namespace {

struct Context {
  const PostCorpus& corpus;
  const ExperimentConfig& config;
  TrainingData data;
  std::unordered_map<UserId, std::int64_t> answer_counts;
  Timestamp origin = 0;
  Duration window = 0;
};

Context make_context(const PostCorpus& corpus, const DatasetSplit& split,
                     const ExperimentConfig& config) {
  config.validate();
  Context ctx{corpus, config, {}, {}, corpus_origin(corpus), config.window_length()};
  const auto candidates = select_candidates(split, corpus, config.effective_min_answers());
  ctx.data = build_training_data(split, corpus, candidates);
  ctx.answer_counts = training_answer_counts(split, corpus);
  return ctx;
}

std::span<const TrainingRecord> records_before(const TrainingData& data, Timestamp t_q) {
  const auto end = std::partition_point(data.records.begin(), data.records.end(),
                                        [&](const TrainingRecord& r) { return r.answer_time < t_q; });
  return {data.records.data(), static_cast<std::size_t>(end - data.records.begin())};
}

WindowedActivity windows_at(const Context& ctx, Timestamp t_q) {
  return build_windowed_activity(records_before(ctx.data, t_q), ctx.data.users.size(),
                                 ctx.data.tags.size(), ctx.window, t_q, ctx.origin);
}

std::uint64_t block_seed(const Context& ctx, Timestamp t_q) {
  const auto block = static_cast<std::uint64_t>((t_q - ctx.origin) / ctx.window + 1);
  return ctx.config.seed ^ (0x9E3779B97F4A7C15ULL * block);
}

// Scores all candidates for questions of one time block at a time.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual void prepare(Timestamp t_q) = 0;
  virtual ResourceVector scores(std::span<const std::uint32_t> tags) = 0;
};

class DiffusionScorer final : public Scorer {
 public:
  explicit DiffusionScorer(const Context& ctx) : ctx_(ctx) {}
  void prepare(Timestamp t_q) override {
    graph_.emplace(temporal_activity(windows_at(ctx_, t_q), t_q), ctx_.config.degree_mode);
  }
  ResourceVector scores(std::span<const std::uint32_t> tags) override {
    return score_question(*graph_, tags);
  }

 private:
  const Context& ctx_;
  std::optional<BipartiteGraph> graph_;
};

class VoteScorer final : public Scorer {
 public:
  explicit VoteScorer(const Context& ctx) : ctx_(ctx) {}
  void prepare(Timestamp t_q) override {
    const auto table = build_vote_table(ctx_.data.answers, ctx_.data.users.size(), t_q);
    const auto result =
        score_baseline_rank(table, ctx_.data.users, ctx_.config.score_trials, block_seed(ctx_, t_q));
    scores_.resize(result.average_rank.size());
    for (std::size_t i = 0; i < scores_.size(); ++i) scores_[i] = -result.average_rank[i];
  }
  ResourceVector scores(std::span<const std::uint32_t>) override { return scores_; }

 private:
  const Context& ctx_;
  ResourceVector scores_;
};

SparseUserTagMatrix mf_input(const Context& ctx, Timestamp t_q, bool temporal) {
  const WindowedActivity w = windows_at(ctx, t_q);
  return temporal ? build_t_tag_mf_input(w, t_q) : total_activity(w);
}

class MFScorer final : public Scorer {
 public:
  MFScorer(const Context& ctx, bool temporal, MFHyperparameters hp)
      : ctx_(ctx), temporal_(temporal), hp_(hp) {}
  void prepare(Timestamp t_q) override {
    const auto matrix = mf_input(ctx_, t_q, temporal_);
    model_.reset();
    if (!matrix.empty()) model_ = train_tag_mf(matrix, hp_, block_seed(ctx_, t_q));
  }
  ResourceVector scores(std::span<const std::uint32_t> tags) override {
    if (!model_) return ResourceVector(ctx_.data.users.size(), 0.0);
    return mf_score(*model_, tags);
  }

 private:
  const Context& ctx_;
  bool temporal_;
  MFHyperparameters hp_;
  std::optional<MFModel> model_;
};

struct Block {
  Timestamp query_time = 0;
  std::vector<const Question*> questions;
};

// Consecutive questions sharing a block; `ids` are in chronological order.
std::vector<Block> group_by_block(const Context& ctx, const std::vector<PostId>& ids) {
  std::vector<Block> blocks;
  for (PostId id : ids) {
    const auto it = ctx.corpus.questions.find(id);
    if (it == ctx.corpus.questions.end()) {
      throw ConfigError("split references unknown question " + std::to_string(id));
    }
    const Timestamp t_q = block_start(it->second.creation_date, ctx.origin, ctx.window);
    if (blocks.empty() || blocks.back().query_time != t_q) blocks.push_back({t_q, {}});
    blocks.back().questions.push_back(&it->second);
  }
  return blocks;
}

QuestionResult assess(const Context& ctx, const Question& q, Timestamp t_q,
                      const std::function<ResourceVector(std::span<const std::uint32_t>)>& score) {
  QuestionResult r;
  r.question_id = q.id;
  r.query_time = t_q;
  const auto gt = ground_truth_user(ctx.corpus, q);
  if (!gt) throw ConfigError("question " + std::to_string(q.id) + " has no ground truth");
  r.ground_truth_user = *gt;
  const auto count = ctx.answer_counts.find(*gt);
  r.cold = (count == ctx.answer_counts.end() ? 0 : count->second) < ctx.config.cold_threshold;
  const auto tags = known_tag_indices(ctx.data.tags, q.tags);
  r.scorable = !tags.empty();
  const auto gt_index = ctx.data.users.find(*gt);
  if (!gt_index) {
    r.excluded = true;
    return r;
  }
  const ResourceVector scores =
      r.scorable ? score(tags) : ResourceVector(ctx.data.users.size(), 0.0);
  r.rank = rank_of(scores, ctx.data.users, *gt_index);
  return r;
}

struct Selection {
  MFHyperparameters hp;
  std::optional<double> validation_mrr;
  std::vector<std::string> notes;
};

Selection select_mf_hyperparameters(const Context& ctx, const DatasetSplit& split, bool temporal) {
  const MFSearchSpace& space = ctx.config.mf;
  const int max_epochs = *std::max_element(space.epochs.begin(), space.epochs.end());
  const auto blocks = group_by_block(ctx, split.validation);

  struct Candidate {
    MFHyperparameters hp;
    double rr_sum = 0.0;
    std::int64_t evaluated = 0;
    bool diverged = false;
  };
  std::vector<Candidate> grid;
  for (double lr : space.learning_rates) {
    for (double l2 : space.l2) {
      for (int epochs : space.epochs) {
        MFHyperparameters hp;
        hp.latent = space.latent;
        hp.negative_ratio = space.negative_ratio;
        hp.learning_rate = lr;
        hp.l2 = l2;
        hp.epochs = epochs;
        grid.push_back({hp});
      }
    }
  }

  Selection sel;
  const std::size_t per_pair = space.epochs.size();
  for (std::size_t first = 0; first < grid.size(); first += per_pair) {
    MFHyperparameters train_hp = grid[first].hp;
    train_hp.epochs = max_epochs;
    try {
      for (const Block& block : blocks) {
        const auto matrix = mf_input(ctx, block.query_time, temporal);
        auto record = [&](std::size_t slot, const std::function<ResourceVector(std::span<const std::uint32_t>)>& score) {
          for (const Question* q : block.questions) {
            const QuestionResult r = assess(ctx, *q, block.query_time, score);
            if (!r.evaluated()) continue;
            grid[slot].rr_sum += 1.0 / r.rank;
            ++grid[slot].evaluated;
          }
        };
        if (matrix.empty()) {
          const ResourceVector zeros(ctx.data.users.size(), 0.0);
          for (std::size_t s = first; s < first + per_pair; ++s) {
            record(s, [&](std::span<const std::uint32_t>) { return zeros; });
          }
          continue;
        }
        train_tag_mf(matrix, train_hp, block_seed(ctx, block.query_time),
                     [&](int epoch, const MFModel& model) {
                       for (std::size_t s = first; s < first + per_pair; ++s) {
                         if (grid[s].hp.epochs != epoch) continue;
                         record(s, [&](std::span<const std::uint32_t> tags) {
                           return mf_score(model, tags);
                         });
                       }
                     });
      }
    } catch (const TrainingError& e) {
      for (std::size_t s = first; s < first + per_pair; ++s) grid[s].diverged = true;
      sel.notes.push_back(std::string("skipped: ") + e.what());
    }
  }

  const Candidate* best = nullptr;
  for (const Candidate& c : grid) {
    if (c.diverged) continue;
    const double score = c.evaluated > 0 ? c.rr_sum / c.evaluated : 0.0;
    const double best_score = best && best->evaluated > 0 ? best->rr_sum / best->evaluated : 0.0;
    if (best == nullptr || score > best_score) best = &c;
  }
  if (best == nullptr) throw TrainingError("every MF hyperparameter setting diverged");
  sel.hp = best->hp;
  if (best->evaluated > 0) {
    sel.validation_mrr = best->rr_sum / best->evaluated;
  } else {
    sel.notes.push_back("no evaluable validation question; first stable grid setting used");
  }
  return sel;
}

struct PreparedScorer {
  std::unique_ptr<Scorer> scorer;
  std::optional<Selection> selection;
};

PreparedScorer make_scorer(const Context& ctx, const DatasetSplit& split, Method method) {
  PreparedScorer out;
  switch (method) {
    case Method::t_bger:
      out.scorer = std::make_unique<DiffusionScorer>(ctx);
      break;
    case Method::score:
      out.scorer = std::make_unique<VoteScorer>(ctx);
      break;
    case Method::tag_mf:
    case Method::t_tag_mf: {
      const bool temporal = method == Method::t_tag_mf;
      out.selection = select_mf_hyperparameters(ctx, split, temporal);
      out.scorer = std::make_unique<MFScorer>(ctx, temporal, out.selection->hp);
      break;
    }
  }
  return out;
}

}  // namespace

EvalReport run_experiment(const PostCorpus& corpus, const DatasetSplit& split, Method method,
                          const ExperimentConfig& config) {
  const Context ctx = make_context(corpus, split, config);
  PreparedScorer prepared = make_scorer(ctx, split, method);

  EvalReport report;
  report.site = corpus.site_name;
  report.method = to_string(method);
  ExperimentConfig effective = config;
  effective.method = report.method;
  report.config_fingerprint = config_fingerprint(effective);
  report.candidates = ctx.data.users.size();
  report.min_answers = config.effective_min_answers();
  report.cold_threshold = config.cold_threshold;
  if (prepared.selection) {
    report.selected = prepared.selection->hp;
    report.validation_mrr = prepared.selection->validation_mrr;
    report.notes = prepared.selection->notes;
  }

  const auto blocks = group_by_block(ctx, split.test);
  report.time_blocks = static_cast<std::int64_t>(blocks.size());
  Scorer& scorer = *prepared.scorer;
  for (const Block& block : blocks) {
    scorer.prepare(block.query_time);
    for (const Question* q : block.questions) {
      report.results.push_back(assess(ctx, *q, block.query_time,
                                      [&](std::span<const std::uint32_t> tags) {
                                        return scorer.scores(tags);
                                      }));
    }
  }

  report.test_questions = static_cast<std::int64_t>(report.results.size());
  std::vector<QuestionResult> cold;
  for (const QuestionResult& r : report.results) {
    if (r.excluded) ++report.excluded;
    else if (!r.scorable) ++report.unscorable;
    else ++report.evaluated;
    if (r.cold) cold.push_back(r);
  }
  report.overall = summarize_metrics(report.results);
  report.cold = summarize_metrics(cold);
  return report;
}

Recommendation recommend(const PostCorpus& corpus, const DatasetSplit& split, Method method,
                         const ExperimentConfig& config, const std::vector<std::string>& tags,
                         Timestamp at) {
  const Context ctx = make_context(corpus, split, config);
  PreparedScorer prepared = make_scorer(ctx, split, method);
  Recommendation rec;
  rec.query_time = block_start(at, ctx.origin, ctx.window);
  const auto normalized = normalize_tags(tags);
  for (const auto& t : normalized) {
    if (!ctx.data.tags.find(t)) rec.unknown_tags.push_back(t);
  }
  const auto known = known_tag_indices(ctx.data.tags, normalized);
  rec.scorable = !known.empty();
  ResourceVector scores(ctx.data.users.size(), 0.0);
  if (rec.scorable) {
    prepared.scorer->prepare(rec.query_time);
    scores = prepared.scorer->scores(known);
  }
  rec.ranking = rank_users(scores, ctx.data.users);
  return rec;
}

Recommendation recommend_from_snapshot(const WindowedActivity& windowed, const TrainingData& data,
                                       const ExperimentConfig& config,
                                       const std::vector<std::string>& tags, Timestamp at) {
  if (windowed.users != data.users.size() || windowed.tags != data.tags.size()) {
    throw ConfigError("snapshot dimensions do not match the corpus split");
  }
  Recommendation rec;
  rec.query_time = block_start(at, windowed.origin, windowed.window_length);
  const auto normalized = normalize_tags(tags);
  for (const auto& t : normalized) {
    if (!data.tags.find(t)) rec.unknown_tags.push_back(t);
  }
  const auto known = known_tag_indices(data.tags, normalized);
  rec.scorable = !known.empty();
  ResourceVector scores(data.users.size(), 0.0);
  if (rec.scorable) {
    const BipartiteGraph graph(temporal_activity(windowed, rec.query_time), config.degree_mode);
    scores = score_question(graph, known);
  }
  rec.ranking = rank_users(scores, data.users);
  return rec;
}

}  // namespace tbger
