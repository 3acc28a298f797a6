// tbger: ingest Stack Exchange dumps, split them, and rank answerers.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "tbger/activity.hpp"
#include "tbger/corpus.hpp"
#include "tbger/diffusion.hpp"
#include "tbger/experiment.hpp"
#include "tbger/split.hpp"

namespace fs = std::filesystem;
using namespace tbger;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kIo = 2, kUsage = 3 };

// Flags shared by the subcommands that run the pipeline. Unset flags leave
// the config file (or the defaults) alone.
struct CommonFlags {
  std::string config_path;
  std::optional<std::string> site;
  std::optional<std::int64_t> window_days;
  std::optional<int> min_answers;
  std::optional<int> cold_threshold;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> degree_mode;
  std::optional<int> score_trials;
  bool cold_start = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--site", site, "Site name used in reports");
    cmd->add_option("--window-days", window_days, "Time window length in days (default 30)");
    cmd->add_option("--min-answers", min_answers,
                    "Training answers a user needs to be a candidate (default 5)");
    cmd->add_option("--cold-threshold", cold_threshold,
                    "Users below this many training answers count as cold (default 10)");
    cmd->add_option("--seed", seed, "Random seed (default 42)");
    cmd->add_option("--degree-mode", degree_mode, "weighted or edge-count");
    cmd->add_option("--score-trials", score_trials, "Permutations for the score baseline");
    cmd->add_flag("--cold-start", cold_start,
                  "Every user with a training answer is a candidate (min answers 1)");
  }

  ExperimentConfig resolve(ExperimentConfig base) const {
    ExperimentConfig c = config_path.empty() ? std::move(base) : load_config(config_path, base);
    if (site) c.site = *site;
    if (window_days) c.window_days = *window_days;
    if (min_answers) c.min_answers = *min_answers;
    if (cold_threshold) c.cold_threshold = *cold_threshold;
    if (seed) c.seed = *seed;
    if (degree_mode) c.degree_mode = parse_degree_mode(*degree_mode);
    if (score_trials) c.score_trials = *score_trials;
    if (cold_start) c.cold_start = true;
    c.validate();
    return c;
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

SplitRatios parse_ratios(const std::string& text) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string piece = text.substr(start, end - start);
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(piece, &used));
      if (used != piece.size()) throw std::invalid_argument(piece);
    } catch (const std::logic_error&) {
      throw ConfigError("bad ratio '" + piece + "' in --ratios");
    }
    start = end + 1;
  }
  if (parts.size() != 3) throw ConfigError("--ratios needs three values: train,validation,test");
  SplitRatios r{parts[0], parts[1], parts[2]};
  r.validate();
  return r;
}

Timestamp parse_time_flag(const std::string& text, const char* flag) {
  const auto t = parse_timestamp(text);
  if (!t) throw ConfigError(std::string(flag) + " expects YYYY-MM-DDTHH:MM:SS, got '" + text + "'");
  return *t;
}

// Corpus plus the partition to evaluate on: the manifest when given,
// otherwise a fresh chronological split.
struct Inputs {
  PostCorpus corpus;
  DatasetSplit split;
  ExperimentConfig config;
};

Inputs load_inputs(const std::string& corpus_path, const std::string& manifest_path,
                   const CommonFlags& flags) {
  Inputs in;
  in.corpus = load_corpus(corpus_path);
  ExperimentConfig base;
  base.site = in.corpus.site_name;
  base.corpus_path = corpus_path;
  base.manifest_path = manifest_path;
  if (!manifest_path.empty()) {
    const SplitManifest m = load_manifest(manifest_path);
    check_manifest(m, in.corpus);
    in.split = m.split;
    base.min_answers = m.min_answers;
    base.ratios = m.split.ratios;
  }
  in.config = flags.resolve(base);
  if (manifest_path.empty()) in.split = chronological_split(in.corpus, in.config.ratios);
  return in;
}

void print_ranking(const Recommendation& rec, const std::string& fingerprint, std::size_t top) {
  fmt::print("# config {}\n", fingerprint);
  fmt::print("# query time {}\n", format_timestamp(rec.query_time));
  if (!rec.unknown_tags.empty()) {
    std::string joined;
    for (const auto& t : rec.unknown_tags) joined += (joined.empty() ? "" : ",") + t;
    fmt::print(stderr, "warning: tags not seen in training: {}\n", joined);
  }
  if (!rec.scorable) {
    fmt::print(stderr, "warning: no known tag; ranking falls back to ascending user id\n");
  }
  fmt::print("{:>5} {:>10} {:>14}\n", "rank", "user_id", "score");
  const std::size_t n = std::min(top, rec.ranking.entries.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = rec.ranking.entries[i];
    fmt::print("{:>5} {:>10} {:>14.6g}\n", i + 1, e.user_id, e.score);
  }
}

int cmd_ingest(const std::string& dump, const std::string& out_path, const CommonFlags& flags) {
  ExperimentConfig base;
  base.site = fs::path(dump).parent_path().filename().string();
  base.dump_path = dump;
  const ExperimentConfig config = flags.resolve(base);
  const IngestResult r = ingest_posts_file(dump, config.site);
  save_corpus(out_path, r.corpus);
  const CorpusSummary s = summarize(r.corpus);
  const ParseStats& p = r.parse_stats;
  const CorpusStats& c = r.corpus_stats;
  fmt::print("# corpus {}\n", corpus_fingerprint(r.corpus));
  fmt::print("site                 {}\n", r.corpus.site_name);
  fmt::print("rows seen            {}\n", p.rows_seen);
  fmt::print("rows skipped (type)  {}\n", p.rows_skipped_other_type);
  fmt::print("rows rejected        {} missing attribute, {} invalid\n",
             p.rows_rejected_missing_attribute, p.rows_rejected_invalid);
  fmt::print("answers dropped      {} orphan, {} without owner, {} before question, {} duplicate\n",
             c.orphan_answers, c.ownerless_answers, c.answers_before_question, c.duplicate_ids);
  fmt::print("dangling accepted    {}\n", c.dangling_accepted_answers);
  fmt::print("questions            {}\n", s.questions);
  fmt::print("evaluable questions  {}\n", s.evaluable_questions);
  fmt::print("answers              {}\n", s.answers);
  fmt::print("answerers            {}\n", s.answerers);
  fmt::print("tags                 {}\n", s.tags);
  fmt::print("tags (evaluable)     {}\n", s.evaluable_tags);
  if (s.questions > 0) {
    fmt::print("span                 {} .. {}\n", format_timestamp(s.first_post),
               format_timestamp(s.last_post));
  }
  return kOk;
}

int cmd_split(const std::string& corpus_path, const std::string& out_path,
              const std::string& ratios_text, const CommonFlags& flags) {
  const PostCorpus corpus = load_corpus(corpus_path);
  ExperimentConfig base;
  base.site = corpus.site_name;
  ExperimentConfig config = flags.resolve(base);
  if (!ratios_text.empty()) config.ratios = parse_ratios(ratios_text);
  const SplitManifest m = make_manifest(corpus, config.ratios, config.effective_min_answers());
  save_manifest(out_path, m);
  fmt::print("# corpus {}\n", m.corpus_fingerprint);
  fmt::print("train {}  validation {}  test {}  candidates {} (min answers {})\n",
             m.split.train.size(), m.split.validation.size(), m.split.test.size(),
             m.candidates.size(), m.min_answers);
  return kOk;
}

int cmd_build(const std::string& corpus_path, const std::string& manifest_path,
              const std::string& out_path, const std::string& at_text, const std::string& w_csv,
              const CommonFlags& flags) {
  const Inputs in = load_inputs(corpus_path, manifest_path, flags);
  const auto candidates =
      select_candidates(in.split, in.corpus, in.config.effective_min_answers());
  const TrainingData data = build_training_data(in.split, in.corpus, candidates);
  const Timestamp origin = corpus_origin(in.corpus);
  const Duration window = in.config.window_length();
  Timestamp t_q;
  if (!at_text.empty()) {
    t_q = block_start(parse_time_flag(at_text, "--at"), origin, window);
  } else {
    // First block boundary after the last training answer.
    Timestamp last = origin;
    for (const auto& r : data.records) last = std::max(last, r.answer_time);
    t_q = block_start(last, origin, window) + window;
  }
  std::vector<TrainingRecord> before;
  for (const auto& r : data.records) {
    if (r.answer_time < t_q) before.push_back(r);
  }
  const WindowedActivity w =
      build_windowed_activity(before, data.users.size(), data.tags.size(), window, t_q, origin);
  save_snapshot(out_path, w);
  fmt::print("# config {}\n", config_fingerprint(in.config));
  fmt::print("snapshot {}: {} users, {} tags, {} windows, query time {}\n", out_path, w.users,
             w.tags, w.total_windows(), format_timestamp(t_q));
  if (!w_csv.empty()) {
    auto out = open_out(w_csv);
    out << "# config " << config_fingerprint(in.config) << '\n';
    write_W_csv(out, BipartiteGraph(temporal_activity(w, t_q), in.config.degree_mode), data.users);
  }
  return kOk;
}

int cmd_recommend(const std::string& corpus_path, const std::string& manifest_path,
                  std::optional<PostId> question, const std::string& tags_text,
                  const std::string& at_text, const std::string& snapshot_path,
                  const std::string& method_name, std::size_t top, const CommonFlags& flags) {
  Inputs in = load_inputs(corpus_path, manifest_path, flags);
  const Method method = parse_method(method_name);
  in.config.method = to_string(method);

  std::optional<WindowedActivity> snapshot;
  if (!snapshot_path.empty()) {
    if (method != Method::t_bger) throw ConfigError("--snapshot only applies to t-bger");
    snapshot = load_snapshot(snapshot_path);
  }

  std::vector<std::string> tags;
  Timestamp at = 0;
  if (question) {
    const auto it = in.corpus.questions.find(*question);
    if (it == in.corpus.questions.end()) {
      throw NotFoundError("question " + std::to_string(*question) + " is not in the corpus");
    }
    tags = it->second.tags;
    at = it->second.creation_date;
  } else {
    if (tags_text.empty() || (at_text.empty() && !snapshot)) {
      throw ConfigError("recommend needs --question, or --tags together with --at");
    }
    if (tags_text.find_first_of("<|") != std::string::npos) {
      tags = split_tags(tags_text);
    } else {
      std::size_t begin = 0;
      while (begin <= tags_text.size()) {
        std::size_t end = tags_text.find(',', begin);
        if (end == std::string::npos) end = tags_text.size();
        tags.push_back(tags_text.substr(begin, end - begin));
        begin = end + 1;
      }
    }
    at = at_text.empty() ? snapshot->query_time : parse_time_flag(at_text, "--at");
  }

  Recommendation rec;
  if (snapshot) {
    const auto candidates =
        select_candidates(in.split, in.corpus, in.config.effective_min_answers());
    const TrainingData data = build_training_data(in.split, in.corpus, candidates);
    rec = recommend_from_snapshot(*snapshot, data, in.config, tags, at);
  } else {
    rec = recommend(in.corpus, in.split, method, in.config, tags, at);
  }
  rec.ranking.question_id = question;
  print_ranking(rec, config_fingerprint(in.config), top);
  return kOk;
}

int cmd_evaluate(const std::string& corpus_path, const std::string& manifest_path,
                 const std::string& method_name, std::string out_dir, const CommonFlags& flags) {
  Inputs in = load_inputs(corpus_path, manifest_path, flags);
  if (!out_dir.empty()) in.config.out_dir = out_dir;
  if (in.config.out_dir.empty()) in.config.out_dir = ".";
  std::vector<Method> methods;
  if (method_name == "all") {
    methods = all_methods();
  } else {
    methods.push_back(parse_method(method_name));
  }
  fs::create_directories(in.config.out_dir);

  std::vector<EvalReport> reports;
  const std::string suffix = in.config.cold_start ? ".cold" : "";
  for (Method m : methods) {
    EvalReport r = run_experiment(in.corpus, in.split, m, in.config);
    const fs::path stem = fs::path(in.config.out_dir) / (r.site + "." + r.method + suffix);
    {
      auto out = open_out(stem.string() + ".report.json");
      write_report_json(out, r);
    }
    {
      auto out = open_out(stem.string() + ".report.txt");
      write_report_text(out, r);
    }
    {
      auto out = open_out(stem.string() + ".per_question.csv");
      write_per_question_csv(out, r);
    }
    write_report_text(std::cout, r);
    std::cout << '\n';
    reports.push_back(std::move(r));
  }
  if (reports.size() > 1 || in.config.cold_start) {
    const fs::path path =
        fs::path(in.config.out_dir) / (in.corpus.site_name + suffix + ".comparison.txt");
    auto out = open_out(path.string());
    out << "# config " << config_fingerprint(in.config) << '\n';
    write_comparison_text(out, reports, false);
    if (in.config.cold_start) {
      out << "\ncold-start users (< " << in.config.cold_threshold << " training answers)\n";
      write_comparison_text(out, reports, true);
    }
    std::cout << "written " << path.string() << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank likely answerers for Stack Exchange questions"};
  app.require_subcommand(1);

  CommonFlags ingest_flags, split_flags, build_flags, rec_flags, eval_flags;

  std::string dump, corpus_out;
  auto* ingest = app.add_subcommand("ingest", "Parse a Posts.xml dump into a corpus file");
  ingest->add_option("dump", dump, "Path to Posts.xml")->required();
  ingest->add_option("-o,--out", corpus_out, "Corpus file to write")->required();
  ingest_flags.attach(ingest);

  std::string split_corpus, manifest_out, ratios;
  auto* split = app.add_subcommand("split", "Chronological train/validation/test split");
  split->add_option("corpus", split_corpus, "Corpus file")->required();
  split->add_option("-o,--out", manifest_out, "Manifest file to write")->required();
  split->add_option("--ratios", ratios, "train,validation,test (default 0.7,0.1,0.2)");
  split_flags.attach(split);

  std::string build_corpus_path, build_manifest, snapshot_out, build_at, w_csv;
  auto* build = app.add_subcommand("build", "Write the windowed activity snapshot");
  build->add_option("corpus", build_corpus_path, "Corpus file")->required();
  build->add_option("--manifest", build_manifest, "Split manifest");
  build->add_option("-o,--out", snapshot_out, "Snapshot file to write")->required();
  build->add_option("--at", build_at, "Query time; defaults to just after training");
  build->add_option("--w-csv", w_csv, "Also write the user x user operator as CSV");
  build_flags.attach(build);

  std::string rec_corpus, rec_manifest, rec_tags, rec_at, rec_snapshot, rec_method = "t-bger";
  std::optional<PostId> rec_question;
  std::size_t top = 10;
  auto* rec = app.add_subcommand("recommend", "Print the top ranked users for a question");
  rec->add_option("corpus", rec_corpus, "Corpus file")->required();
  rec->add_option("--manifest", rec_manifest, "Split manifest");
  rec->add_option("--question", rec_question, "Question id from the corpus");
  rec->add_option("--tags", rec_tags, "Comma separated tags (with --at)");
  rec->add_option("--at", rec_at, "Query time, YYYY-MM-DDTHH:MM:SS");
  rec->add_option("--snapshot", rec_snapshot, "Activity snapshot written by build");
  rec->add_option("--method", rec_method, "t-bger, score, tag-mf or t-tag-mf");
  rec->add_option("-k,--top", top, "How many users to print");
  rec_flags.attach(rec);

  std::string eval_corpus, eval_manifest, eval_method = "t-bger", eval_out;
  auto* eval = app.add_subcommand("evaluate", "Score the test questions and write reports");
  eval->add_option("corpus", eval_corpus, "Corpus file")->required();
  eval->add_option("--manifest", eval_manifest, "Split manifest");
  eval->add_option("--method", eval_method, "t-bger, score, tag-mf, t-tag-mf or all");
  eval->add_option("--out-dir", eval_out, "Directory for reports");
  eval_flags.attach(eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest) return cmd_ingest(dump, corpus_out, ingest_flags);
    if (*split) return cmd_split(split_corpus, manifest_out, ratios, split_flags);
    if (*build) {
      return cmd_build(build_corpus_path, build_manifest, snapshot_out, build_at, w_csv,
                       build_flags);
    }
    if (*rec) {
      return cmd_recommend(rec_corpus, rec_manifest, rec_question, rec_tags, rec_at, rec_snapshot,
                           rec_method, top, rec_flags);
    }
    if (*eval) return cmd_evaluate(eval_corpus, eval_manifest, eval_method, eval_out, eval_flags);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const NotFoundError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const SplitError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const IoError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kIo;
  } catch (const ParseError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kIo;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kIo;
  } catch (const std::exception& e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return kInternal;
  }
  return kInternal;
}
