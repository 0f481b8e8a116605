#pragma once

#include <string>
#include <vector>

#include "qtp/flatten.hpp"
#include "qtp/gateway.hpp"
#include "qtp/knowledge_format.hpp"
#include "qtp/prompts.hpp"

namespace qtp {

struct InferenceConfig {
  /// When set, insights whose evidence fails validation against the table
  /// (unknown column, out-of-range row) are dropped from the knowledge
  /// block instead of passed through.
  bool gate_evidence = false;
  int max_questions_per_aspect = 0;  // 0 = take what the reasoner proposes
  std::string qg_template = "reasoner_qg";
  std::string ig_template = "reasoner_ig";
  std::string summarize_template = "summarize";
  std::size_t max_table_chars = kDefaultMaxFlatChars;
};

/// Asks the trained reasoner for aspects and questions, given only the
/// table.  No reference summary is involved anywhere at inference time.
inline std::vector<AspectQuestions> generate_questions(Gateway& gateway,
                                                       const PromptLibrary& prompts,
                                                       const Table& table,
                                                       const InferenceConfig& cfg = {}) {
  const PromptTemplate& tmpl = prompts.get(cfg.qg_template);
  require_placeholders(tmpl, {"table"});
  std::string prompt =
      render_prompt(tmpl, {{"table", serialize_table(table, cfg.max_table_chars).text}});
  ChatExchange ex = gateway.chat_prompt(Role::Reasoner, prompt);

  auto groups = parse_aq_block(ex.completion, cfg.max_questions_per_aspect);
  if (groups.empty()) throw AQParseError(ex.completion);
  return groups;
}

struct InsightOutcome {
  KnowledgeTriple triple;
  bool gated_out = false;  // evidence failed validation under gate_evidence
};

/// One reasoner call answering one question: the reply must begin with a
/// canonical evidence expression, the rest is the insight.
inline InsightOutcome generate_insight(Gateway& gateway, const PromptLibrary& prompts,
                                       const Table& table, const Question& question,
                                       const InferenceConfig& cfg = {}) {
  const PromptTemplate& tmpl = prompts.get(cfg.ig_template);
  require_placeholders(tmpl, {"table", "question"});
  std::string prompt =
      render_prompt(tmpl, {{"table", serialize_table(table, cfg.max_table_chars).text},
                           {"question", question.text}});
  ChatExchange ex = gateway.chat_prompt(Role::Reasoner, prompt);

  std::string reply(trim(ex.completion));
  CellEvidence evidence;
  std::size_t consumed;
  try {
    consumed = parse_evidence_prefix(reply, evidence);
  } catch (const EvidenceParseError& e) {
    throw EIParseError("reply does not start with an evidence expression: " +
                       std::string(e.what()));
  }
  std::string insight(trim(std::string_view(reply).substr(consumed)));
  if (insight.empty()) throw EIParseError("no insight text after the evidence expression");

  InsightOutcome outcome;
  outcome.triple.question = question;
  outcome.triple.evidence = evidence;
  outcome.triple.evidence_raw = evidence.raw;
  outcome.triple.insight.text = insight;

  if (cfg.gate_evidence && !validate_evidence(evidence, table).valid) {
    outcome.gated_out = true;
    warn("dropping insight for question '" + question.text +
         "': evidence does not check out against the table");
  }
  return outcome;
}

/// Summarizes the table grounded in an assembled knowledge block.  An
/// empty knowledge set degrades to plain zero-knowledge summarization of
/// the flattened table.
inline std::string summarize_with_knowledge(Gateway& gateway, const PromptLibrary& prompts,
                                            const Table& table, const KnowledgeSet& knowledge,
                                            const InferenceConfig& cfg = {}) {
  const PromptTemplate& tmpl = prompts.get(cfg.summarize_template);
  require_placeholders(tmpl, {"table", "knowledge"});
  std::string prompt =
      render_prompt(tmpl, {{"table", serialize_table(table, cfg.max_table_chars).text},
                           {"knowledge", render_knowledge_block(knowledge)}});
  return gateway.chat_prompt(Role::Summarizer, prompt).completion;
}

struct InferenceResult {
  std::string summary;
  KnowledgeSet knowledge;              // what the summary was grounded in
  std::vector<std::string> trace;      // fingerprints: 1 QG + one per question + 1 summary
  int gated_out = 0;
};

/// The full question-then-pinpoint flow for one table: generate questions,
/// answer each with evidence-first insights, assemble the knowledge block,
/// summarize.  Questions are answered in order, one call each, so the
/// trace always holds 1 + #questions + 1 fingerprints.
inline InferenceResult run_inference(Gateway& gateway, const PromptLibrary& prompts,
                                     const Table& table, const InferenceConfig& cfg = {}) {
  if (!gateway.has_profile(Role::Reasoner))
    throw ConfigError("inference needs a reasoner profile");
  if (!gateway.has_profile(Role::Summarizer))
    throw ConfigError("inference needs a summarizer profile");

  InferenceResult result;
  std::size_t log_mark = gateway.request_log().size();

  auto groups = generate_questions(gateway, prompts, table, cfg);
  result.trace.push_back(gateway.request_log()[log_mark].fingerprint);

  for (const auto& g : groups) result.knowledge.aspects.push_back(g.aspect);
  for (const auto& g : groups) {
    for (const auto& q : g.questions) {
      log_mark = gateway.request_log().size();
      InsightOutcome outcome = generate_insight(gateway, prompts, table, q, cfg);
      result.trace.push_back(gateway.request_log()[log_mark].fingerprint);
      if (outcome.gated_out) {
        ++result.gated_out;
        continue;
      }
      result.knowledge.triples.push_back(std::move(outcome.triple));
    }
  }

  log_mark = gateway.request_log().size();
  result.summary = summarize_with_knowledge(gateway, prompts, table, result.knowledge, cfg);
  result.trace.push_back(gateway.request_log()[log_mark].fingerprint);
  return result;
}

}  // namespace qtp
