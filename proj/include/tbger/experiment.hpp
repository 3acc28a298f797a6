#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tbger/baselines.hpp"
#include "tbger/corpus.hpp"
#include "tbger/diffusion.hpp"
#include "tbger/metrics.hpp"
#include "tbger/split.hpp"

namespace tbger {

enum class Method { t_bger, score, tag_mf, t_tag_mf };

const char* to_string(Method method);
// Throws ConfigError for unknown names.
Method parse_method(const std::string& name);
const std::vector<Method>& all_methods();

// Hyperparameter grid for the MF baselines, searched on the validation set.
struct MFSearchSpace {
  int latent = 10;
  double negative_ratio = 1.0;
  std::vector<double> learning_rates{0.1, 0.01};
  std::vector<double> l2{0.1, 0.01, 0.001};
  std::vector<int> epochs{50, 100, 200};
};

struct ExperimentConfig {
  std::string site;
  std::int64_t window_days = 30;
  int min_answers = 5;
  int cold_threshold = 10;
  // Cold-start protocol: every user with at least one training answer is a
  // candidate (min_answers forced to 1).
  bool cold_start = false;
  std::string method = "t-bger";
  std::uint64_t seed = 42;
  DegreeMode degree_mode = DegreeMode::weighted;
  int score_trials = kDefaultScoreTrials;
  SplitRatios ratios;
  MFSearchSpace mf;

  // Locations; not part of the fingerprint.
  std::string dump_path;
  std::string corpus_path;
  std::string manifest_path;
  std::string out_dir;

  Duration window_length() const { return window_days * kSecondsPerDay; }
  int effective_min_answers() const { return cold_start ? 1 : min_answers; }

  // Throws ConfigError on non-positive durations, thresholds or trials.
  void validate() const;
};

nlohmann::ordered_json config_to_json(const ExperimentConfig& config, bool include_paths = true);
// Fields present in `j` override those of `base`; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

// Hash of the result-affecting configuration (paths excluded).
std::string config_fingerprint(const ExperimentConfig& config);

struct EvalReport {
  std::string site;
  std::string method;
  std::string config_fingerprint;
  std::int64_t candidates = 0;
  int min_answers = 0;
  int cold_threshold = 0;
  std::int64_t time_blocks = 0;

  std::vector<QuestionResult> results;  // test questions, chronological
  std::int64_t test_questions = 0;
  std::int64_t evaluated = 0;
  std::int64_t excluded = 0;    // ground truth not a candidate
  std::int64_t unscorable = 0;  // no known tag
  MetricSummary overall;
  MetricSummary cold;  // evaluated questions with a cold ground truth

  // MF baselines: configuration picked on the validation set.
  std::optional<MFHyperparameters> selected;
  std::optional<double> validation_mrr;
  std::vector<std::string> notes;
};

// Start of the fixed-length block containing t, blocks anchored at origin.
Timestamp block_start(Timestamp t, Timestamp origin, Duration window_length);

// Scores every test question of the split with one method and collects the
// ranks of the accepted answerers.
EvalReport run_experiment(const PostCorpus& corpus, const DatasetSplit& split, Method method,
                          const ExperimentConfig& config);

// Ranking of candidates for an ad-hoc query (tags at a point in time).
struct Recommendation {
  Ranking ranking;
  Timestamp query_time = 0;
  std::vector<std::string> unknown_tags;
  bool scorable = true;
};

Recommendation recommend(const PostCorpus& corpus, const DatasetSplit& split, Method method,
                         const ExperimentConfig& config, const std::vector<std::string>& tags,
                         Timestamp at);

// Same, starting from a prebuilt activity snapshot (t-BGER only).
Recommendation recommend_from_snapshot(const WindowedActivity& windowed, const TrainingData& data,
                                       const ExperimentConfig& config,
                                       const std::vector<std::string>& tags, Timestamp at);

// Report emission: JSON (machine), aligned text (human), per-question CSV.
nlohmann::ordered_json report_to_json(const EvalReport& report);
void write_report_json(std::ostream& out, const EvalReport& report);
void write_report_text(std::ostream& out, const EvalReport& report);
void write_per_question_csv(std::ostream& out, const EvalReport& report);
// Side-by-side MRR/P@1/P@3 table, plus cold-start gains relative to the
// first report when `cold` is set.
void write_comparison_text(std::ostream& out, const std::vector<EvalReport>& reports, bool cold);

}  // namespace tbger
