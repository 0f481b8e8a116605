#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qtp/flatten.hpp"
#include "qtp/gateway.hpp"
#include "qtp/knowledge_format.hpp"
#include "qtp/prompts.hpp"

namespace qtp {

struct MinerConfig {
  int questions_per_aspect = 5;  // cap on mined questions under one aspect
  std::string aq_template = "mine_aq";
  std::string ei_template = "mine_ei";
  std::size_t max_table_chars = kDefaultMaxFlatChars;
};

/// Coarse pass: asks the teacher which aspects of the table the reference
/// summary touches and for fine-grained questions under each.  The summary
/// conditions the mining, so it must be nonempty.
inline std::vector<AspectQuestions> mine_aspects_questions(Gateway& gateway,
                                                           const PromptLibrary& prompts,
                                                           const Table& table,
                                                           const std::string& summary,
                                                           const MinerConfig& cfg = {}) {
  if (trim(summary).empty())
    throw std::invalid_argument("aspect mining needs a reference summary");

  const PromptTemplate& tmpl = prompts.get(cfg.aq_template);
  require_placeholders(tmpl, {"table", "summary"});
  std::string prompt = render_prompt(
      tmpl, {{"table", serialize_table(table, cfg.max_table_chars).text}, {"summary", summary}});

  ChatExchange ex = gateway.chat_prompt(Role::Teacher, prompt);
  if (trim(ex.completion).empty()) throw AQParseError(ex.completion);

  auto groups = parse_aq_block(ex.completion, cfg.questions_per_aspect);
  if (groups.empty()) throw EmptyAspectsError();
  return groups;
}

/// Fine pass: one teacher call covering every mined question, answered as
/// (question, evidence, insight) groups.  Groups pair with the input
/// questions by position; the stored question text is always the input
/// question verbatim, never the teacher's echo.  A group whose evidence
/// text does not parse becomes a raw-only triple.  Incomplete groups are
/// dropped with a warning.  On a count mismatch the call is retried once
/// with an explicit count reminder before giving up.
inline std::vector<KnowledgeTriple> mine_evidence_insights(Gateway& gateway,
                                                           const PromptLibrary& prompts,
                                                           const Table& table,
                                                           const std::string& summary,
                                                           const std::vector<Question>& questions,
                                                           const MinerConfig& cfg = {}) {
  if (questions.empty()) return {};

  const PromptTemplate& tmpl = prompts.get(cfg.ei_template);
  require_placeholders(tmpl, {"table", "questions"});
  std::string prompt =
      render_prompt(tmpl, {{"table", serialize_table(table, cfg.max_table_chars).text},
                           {"summary", summary},
                           {"questions", render_questions_list(questions)}});

  ChatExchange ex = gateway.chat_prompt(Role::Teacher, prompt);
  auto groups = parse_ei_reply(ex.completion);

  if (groups.size() != questions.size()) {
    std::string reminder = prompt + "\n\nAnswer with exactly " +
                           std::to_string(questions.size()) +
                           " (Question, Evidence, Insight) groups, one per question, in order.";
    ex = gateway.chat_prompt(Role::Teacher, reminder);
    groups = parse_ei_reply(ex.completion);
    if (groups.size() != questions.size())
      throw QuestionCountMismatchError(questions.size(), groups.size());
  }

  std::vector<KnowledgeTriple> triples;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!groups[i].complete()) {
      warn("dropping incomplete evidence/insight group for question " + std::to_string(i + 1));
      continue;
    }
    KnowledgeTriple tr;
    tr.question = questions[i];
    tr.evidence_raw = *groups[i].evidence_raw;
    try {
      tr.evidence = parse_evidence(tr.evidence_raw);
    } catch (const EvidenceParseError& e) {
      warn("evidence for question " + std::to_string(i + 1) +
           " kept raw only: " + e.what());
      tr.evidence.reset();
    }
    tr.insight.text = *groups[i].insight;
    triples.push_back(std::move(tr));
  }
  return triples;
}

/// Full mining pass over one corpus record.
inline AugmentedRecord mine_record(Gateway& gateway, const PromptLibrary& prompts,
                                   const CorpusRecord& rec, const MinerConfig& cfg = {}) {
  auto groups = mine_aspects_questions(gateway, prompts, rec.table, rec.summary, cfg);

  std::vector<Question> all_questions;
  for (const auto& g : groups)
    all_questions.insert(all_questions.end(), g.questions.begin(), g.questions.end());

  auto triples =
      mine_evidence_insights(gateway, prompts, rec.table, rec.summary, all_questions, cfg);

  AugmentedRecord out;
  out.table = rec.table;
  out.reference_summary = rec.summary;
  for (const auto& g : groups) out.knowledge.aspects.push_back(g.aspect);
  out.knowledge.triples = std::move(triples);
  validate_knowledge_set(out.knowledge);
  out.mark_stage(Stage::Mined);
  return out;
}

}  // namespace qtp
