#pragma once

#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qtp/judge.hpp"
#include "qtp/jsonl.hpp"
#include "qtp/metrics.hpp"

namespace qtp {

inline const std::vector<std::string> kSurfaceMetrics = {"bleu", "rouge_l", "meteor"};
inline const std::vector<std::string> kJudgeMetrics = {"geval", "faithfulness"};

struct EvalExample {
  std::string table_id;
  Table table;
  std::string reference;
  std::string candidate;
};

/// Scores for one run: per-example values, their means, and a count of
/// examples each metric could not score (judge refused to answer, empty
/// text, ...).  Failed examples are excluded from the mean, never imputed.
struct MetricReport {
  json config;
  std::vector<std::string> example_order;
  std::map<std::string, std::map<std::string, double>> per_example;  // id -> metric -> value
  std::map<std::string, double> aggregate;
  std::map<std::string, int> failures;
};

/// Computes the requested metrics over candidate/reference pairs.  Judge
/// metrics need a gateway and prompt library; surface metrics run fully
/// offline.  A metric failing on one example is recorded and skipped, so
/// one bad example cannot sink a whole evaluation.
inline MetricReport evaluate_examples(const std::vector<EvalExample>& examples,
                                      const std::vector<std::string>& metrics,
                                      Gateway* gateway = nullptr,
                                      const PromptLibrary* prompts = nullptr) {
  for (const auto& name : metrics) {
    bool surface = std::find(kSurfaceMetrics.begin(), kSurfaceMetrics.end(), name) !=
                   kSurfaceMetrics.end();
    bool judged = std::find(kJudgeMetrics.begin(), kJudgeMetrics.end(), name) !=
                  kJudgeMetrics.end();
    if (!surface && !judged) throw ConfigError("unknown metric '" + name + "'");
    if (judged && (gateway == nullptr || prompts == nullptr))
      throw ConfigError("metric '" + name + "' needs a judge profile; "
                        "use surface metrics only or configure one");
  }

  MetricReport report;
  report.config = json{{"metrics", metrics}, {"tokenizer", std::string(kTokenizerVersion)}};

  for (const auto& ex : examples) {
    report.example_order.push_back(ex.table_id);
    auto& row = report.per_example[ex.table_id];
    for (const auto& name : metrics) {
      try {
        std::optional<double> value;
        if (name == "bleu") {
          value = bleu(ex.candidate, ex.reference);
        } else if (name == "rouge_l") {
          value = rouge_l_f1(ex.candidate, ex.reference);
        } else if (name == "meteor") {
          value = meteor_basic(ex.candidate, ex.reference);
        } else if (name == "geval") {
          value = geval_score(*gateway, *prompts, ex.table, ex.candidate);
        } else if (name == "faithfulness") {
          value = sentence_faithfulness(*gateway, *prompts, ex.table, ex.candidate);
        }
        if (value) {
          row[name] = *value;
        } else {
          ++report.failures[name];
        }
      } catch (const Error&) {
        ++report.failures[name];
      }
    }
  }

  for (const auto& name : metrics) {
    double sum = 0.0;
    int n = 0;
    for (const auto& [id, row] : report.per_example) {
      auto it = row.find(name);
      if (it != row.end()) {
        sum += it->second;
        ++n;
      }
    }
    if (n > 0) report.aggregate[name] = sum / n;
    report.failures.try_emplace(name, 0);
  }
  return report;
}

inline void write_report_jsonl(const MetricReport& report, const std::filesystem::path& path) {
  JsonlWriter out(path);
  out.write(json{{"kind", "config"}, {"config", report.config}});
  for (const auto& id : report.example_order) {
    json row = json::object();
    auto it = report.per_example.find(id);
    if (it != report.per_example.end())
      for (const auto& [metric, value] : it->second) row[metric] = value;
    out.write(json{{"kind", "example"}, {"table_id", id}, {"scores", row}});
  }
  out.write(json{{"kind", "aggregate"},
                 {"scores", report.aggregate},
                 {"failures", report.failures},
                 {"examples", report.example_order.size()}});
}

inline void print_report(const MetricReport& report, std::ostream& os) {
  os << "metric        mean        scored  failed\n";
  for (const auto& [name, mean] : report.aggregate) {
    int failed = report.failures.count(name) ? report.failures.at(name) : 0;
    int scored = 0;
    for (const auto& [id, row] : report.per_example) scored += row.count(name) ? 1 : 0;
    os << std::left << std::setw(14) << name << std::setw(12) << std::setprecision(6) << mean
       << std::setw(8) << scored << failed << "\n";
  }
  for (const auto& [name, failed] : report.failures) {
    if (!report.aggregate.count(name))
      os << std::left << std::setw(14) << name << std::setw(12) << "-" << std::setw(8) << 0
         << failed << "\n";
  }
}

struct PairwiseReport {
  std::string criterion;
  int wins_a = 0;
  int wins_b = 0;
  int ties = 0;
  int failures = 0;
  std::vector<std::pair<std::string, std::string>> per_example;  // (table_id, outcome)
};

/// Judges candidate A against candidate B example by example under one
/// comparison criterion.  Examples the judge cannot decide (unparseable in
/// either order) are counted as failures, not ties.
inline PairwiseReport evaluate_pairwise(const std::vector<EvalExample>& examples_a,
                                        const std::vector<EvalExample>& examples_b,
                                        Gateway& gateway, const PromptLibrary& prompts,
                                        const std::string& template_name) {
  std::map<std::string, const EvalExample*> b_by_id;
  for (const auto& ex : examples_b) b_by_id[ex.table_id] = &ex;

  PairwiseReport report;
  report.criterion = template_name;
  std::vector<std::string> missing;
  for (const auto& a : examples_a) {
    if (!b_by_id.count(a.table_id)) missing.push_back(a.table_id);
  }
  if (!missing.empty()) throw JoinError(missing);

  for (const auto& a : examples_a) {
    const EvalExample& b = *b_by_id.at(a.table_id);
    try {
      PairwiseOutcome outcome =
          pairwise_compare(gateway, prompts, a.table, a.candidate, b.candidate, template_name);
      switch (outcome) {
        case PairwiseOutcome::A: ++report.wins_a; break;
        case PairwiseOutcome::B: ++report.wins_b; break;
        case PairwiseOutcome::Tie: ++report.ties; break;
      }
      report.per_example.emplace_back(a.table_id, to_string(outcome));
    } catch (const MetricParseError&) {
      ++report.failures;
      report.per_example.emplace_back(a.table_id, "failed");
    }
  }
  return report;
}

}  // namespace qtp
