#include <fmt/format.h>

#include <ostream>

#include "tbger/experiment.hpp"

namespace tbger {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json metrics_json(const MetricSummary& m) {
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  return ordered_json{{"evaluated", m.evaluated},
                      {"mrr", opt(m.mrr)},
                      {"p_at_1", opt(m.p_at_1)},
                      {"p_at_3", opt(m.p_at_3)}};
}

std::string metric_cell(const std::optional<double>& v) {
  return v ? fmt::format("{:.3f}", *v) : std::string("-");
}

}  // namespace

ordered_json report_to_json(const EvalReport& r) {
  ordered_json j;
  j["format"] = 1;
  j["site"] = r.site;
  j["method"] = r.method;
  j["config_fingerprint"] = r.config_fingerprint;
  j["candidates"] = r.candidates;
  j["min_answers"] = r.min_answers;
  j["cold_threshold"] = r.cold_threshold;
  j["time_blocks"] = r.time_blocks;
  j["counts"] = {{"test_questions", r.test_questions},
                 {"evaluated", r.evaluated},
                 {"excluded_ground_truth_not_candidate", r.excluded},
                 {"unscorable", r.unscorable}};
  j["metrics"] = metrics_json(r.overall);
  j["cold_start"] = metrics_json(r.cold);
  if (r.selected) {
    j["selected_hyperparameters"] = {{"latent", r.selected->latent},
                                     {"learning_rate", r.selected->learning_rate},
                                     {"l2", r.selected->l2},
                                     {"epochs", r.selected->epochs},
                                     {"negative_ratio", r.selected->negative_ratio}};
    j["validation_mrr"] = r.validation_mrr ? ordered_json(*r.validation_mrr) : ordered_json(nullptr);
  }
  j["notes"] = r.notes;
  ordered_json questions = ordered_json::array();
  for (const QuestionResult& q : r.results) {
    questions.push_back({{"question_id", q.question_id},
                         {"ground_truth_user", q.ground_truth_user},
                         {"rank", q.excluded ? ordered_json(nullptr) : ordered_json(q.rank)},
                         {"scorable", q.scorable},
                         {"excluded", q.excluded},
                         {"cold", q.cold},
                         {"query_time", q.query_time}});
  }
  j["questions"] = std::move(questions);
  return j;
}

void write_report_json(std::ostream& out, const EvalReport& report) {
  out << report_to_json(report).dump(1) << '\n';
}

void write_report_text(std::ostream& out, const EvalReport& r) {
  out << fmt::format("# config {}\n", r.config_fingerprint);
  out << fmt::format("site {}  method {}  candidates {} (min answers {})  blocks {}\n", r.site,
                     r.method, r.candidates, r.min_answers, r.time_blocks);
  out << fmt::format("test questions {}  evaluated {}  excluded (ground truth not candidate) {}  "
                     "unscorable {}\n",
                     r.test_questions, r.evaluated, r.excluded, r.unscorable);
  out << fmt::format("{:<12}{:>10}{:>8}{:>8}{:>8}\n", "subset", "evaluated", "MRR", "P@1", "P@3");
  auto row = [&](const char* name, const MetricSummary& m) {
    out << fmt::format("{:<12}{:>10}{:>8}{:>8}{:>8}\n", name, m.evaluated, metric_cell(m.mrr),
                       metric_cell(m.p_at_1), metric_cell(m.p_at_3));
  };
  row("all", r.overall);
  row(fmt::format("cold(<{})", r.cold_threshold).c_str(), r.cold);
  if (r.selected) {
    out << fmt::format("selected {} (validation MRR {})\n", describe(*r.selected),
                       metric_cell(r.validation_mrr));
  }
  for (const auto& note : r.notes) out << "note: " << note << '\n';
}

void write_per_question_csv(std::ostream& out, const EvalReport& r) {
  out << "# config " << r.config_fingerprint << '\n';
  out << "question_id,method,rank_q,t_q_block\n";
  for (const QuestionResult& q : r.results) {
    if (q.excluded) {
      out << fmt::format("{},{},,{}\n", q.question_id, r.method, format_timestamp(q.query_time));
    } else {
      out << fmt::format("{},{},{},{}\n", q.question_id, r.method, q.rank,
                         format_timestamp(q.query_time));
    }
  }
}

void write_comparison_text(std::ostream& out, const std::vector<EvalReport>& reports, bool cold) {
  if (reports.empty()) return;
  out << fmt::format("{:<10}{:>10}{:>8}{:>8}{:>8}", "method", "evaluated", "MRR", "P@1", "P@3");
  if (cold) out << fmt::format("{:>10}", "gain");
  out << '\n';
  const auto& base = cold ? reports.front().cold : reports.front().overall;
  for (const EvalReport& r : reports) {
    const MetricSummary& m = cold ? r.cold : r.overall;
    out << fmt::format("{:<10}{:>10}{:>8}{:>8}{:>8}", r.method, m.evaluated, metric_cell(m.mrr),
                       metric_cell(m.p_at_1), metric_cell(m.p_at_3));
    if (cold) {
      // Gain of the first report (normally t-BGER) over this method.
      if (base.mrr && m.mrr && *m.mrr > 0) {
        out << fmt::format("{:>10.1f}", *base.mrr / *m.mrr);
      } else {
        out << fmt::format("{:>10}", "-");
      }
    }
    out << '\n';
  }
}

}  // namespace tbger
