#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtp/flatten.hpp"
#include "qtp/gateway.hpp"
#include "qtp/knowledge_format.hpp"
#include "qtp/prompts.hpp"

namespace qtp {

/// One instruction-tuning example.  `task` is "qg" (table -> aspects and
/// questions) or "ig" (table + question -> evidence then insight).
struct TrainRecord {
  std::string task;
  std::string instruction;
  std::string input;
  std::string output;
  std::string table_id;
  std::optional<int> aspect_index;
  std::optional<int> question_index;

  friend bool operator==(const TrainRecord&, const TrainRecord&) = default;
};

inline void to_json(json& j, const TrainRecord& r) {
  json meta{{"table_id", r.table_id}};
  if (r.aspect_index) meta["aspect"] = *r.aspect_index;
  if (r.question_index) meta["qidx"] = *r.question_index;
  j = json{{"task", r.task},
           {"instruction", r.instruction},
           {"input", r.input},
           {"output", r.output},
           {"meta", meta}};
}

inline void from_json(const json& j, TrainRecord& r) {
  r.task = j.at("task").get<std::string>();
  r.instruction = j.at("instruction").get<std::string>();
  r.input = j.at("input").get<std::string>();
  r.output = j.at("output").get<std::string>();
  r.table_id = j.at("meta").at("table_id").get<std::string>();
  if (j["meta"].contains("aspect")) r.aspect_index = j["meta"]["aspect"].get<int>();
  if (j["meta"].contains("qidx")) r.question_index = j["meta"]["qidx"].get<int>();
}

namespace detail {

/// The reasoner templates are "<instruction>\n\nTable: {table}...".  The
/// instruction part doubles as the training-record instruction field, so
/// it is sliced off the template rather than duplicated in a second file.
inline std::string instruction_of(const PromptTemplate& tmpl) {
  std::size_t cut = tmpl.body.find("\n\nTable:");
  if (cut == std::string::npos)
    throw ConfigError("template '" + tmpl.name + "' has no \"Table:\" section");
  return std::string(trim(std::string_view(tmpl.body).substr(0, cut)));
}

inline std::vector<AspectQuestions> grouped_questions(const KnowledgeSet& ks) {
  std::vector<AspectQuestions> groups;
  for (const auto& aspect : ks.aspects) {
    AspectQuestions g{aspect, {}};
    for (const auto& tr : ks.triples)
      if (tr.question.aspect_index == aspect.index) g.questions.push_back(tr.question);
    if (!g.questions.empty()) groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace detail

/// Question-generation examples: one per record, teaching the reasoner to
/// propose the surviving aspects and questions from the table alone.
inline std::vector<TrainRecord> emit_qg_records(const std::vector<AugmentedRecord>& records,
                                                const PromptLibrary& prompts,
                                                std::size_t max_table_chars = kDefaultMaxFlatChars) {
  std::string instruction = detail::instruction_of(prompts.get("reasoner_qg"));
  std::vector<TrainRecord> out;
  for (const auto& rec : records) {
    TrainRecord r;
    r.task = "qg";
    r.instruction = instruction;
    r.input = serialize_table(rec.table, max_table_chars).text;
    r.output = render_aq_block(detail::grouped_questions(rec.knowledge));
    r.table_id = rec.table_id();
    out.push_back(std::move(r));
  }
  return out;
}

struct IgEmit {
  std::vector<TrainRecord> records;
  int skipped_raw_only = 0;
};

/// Insight-generation examples: one per triple, with the evidence rendered
/// canonically *before* the insight so the reasoner learns to pinpoint
/// cells first and conclude second.  Triples whose evidence never parsed
/// cannot be rendered canonically and are skipped (counted, not fatal).
inline IgEmit emit_ig_records(const std::vector<AugmentedRecord>& records,
                              const PromptLibrary& prompts,
                              std::size_t max_table_chars = kDefaultMaxFlatChars) {
  std::string instruction = detail::instruction_of(prompts.get("reasoner_ig"));
  IgEmit out;
  for (const auto& rec : records) {
    std::string flat = serialize_table(rec.table, max_table_chars).text;
    for (const auto& tr : rec.knowledge.triples) {
      if (!tr.evidence) {
        ++out.skipped_raw_only;
        continue;
      }
      TrainRecord r;
      r.task = "ig";
      r.instruction = instruction;
      r.input = flat + "\nQuestion: " + tr.question.text;
      r.output = render_evidence(*tr.evidence) + " " + tr.insight.text;
      r.table_id = rec.table_id();
      r.aspect_index = tr.question.aspect_index;
      r.question_index = tr.question.question_index;
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

/// Deterministic shuffle of the combined task mix.  Fisher–Yates over a
/// fixed-algorithm generator: the same seed gives the same order on every
/// platform, which std::shuffle does not promise.
inline std::vector<TrainRecord> shuffle_interleave(std::vector<TrainRecord> qg,
                                                   std::vector<TrainRecord> ig,
                                                   std::uint64_t seed) {
  std::vector<TrainRecord> all = std::move(qg);
  all.insert(all.end(), std::make_move_iterator(ig.begin()), std::make_move_iterator(ig.end()));
  std::mt19937_64 gen(seed);
  for (std::size_t i = all.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(gen() % i);
    std::swap(all[i - 1], all[j]);
  }
  return all;
}

/// Folds several query-focused reference summaries into one table-level
/// reference.  With one summary and skip_single set, the model call is
/// skipped and the summary passes through unchanged.
inline std::string aggregate_reference_summaries(Gateway& gateway, const PromptLibrary& prompts,
                                                 const Table& table,
                                                 const std::vector<std::string>& summaries,
                                                 bool skip_single = true,
                                                 std::size_t max_table_chars = kDefaultMaxFlatChars) {
  if (summaries.empty())
    throw std::invalid_argument("nothing to aggregate: no summaries given");
  if (summaries.size() == 1 && skip_single) return summaries[0];

  const PromptTemplate& tmpl = prompts.get("aggregate");
  require_placeholders(tmpl, {"table", "summaries"});
  std::string listed;
  for (std::size_t i = 0; i < summaries.size(); ++i)
    listed += std::to_string(i + 1) + ". " + summaries[i] + "\n";

  std::string prompt = render_prompt(
      tmpl, {{"table", serialize_table(table, max_table_chars).text}, {"summaries", listed}});
  return gateway.chat_prompt(Role::Teacher, prompt).completion;
}

}  // namespace qtp
