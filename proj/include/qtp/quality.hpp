#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qtp/flatten.hpp"
#include "qtp/gateway.hpp"
#include "qtp/knowledge_format.hpp"
#include "qtp/metrics.hpp"
#include "qtp/prompts.hpp"

namespace qtp {

enum class SimBackend { EmbeddingCosine, TokenF1 };

inline std::string to_string(SimBackend s) {
  return s == SimBackend::EmbeddingCosine ? "embedding-cosine" : "token-f1";
}

inline SimBackend sim_backend_from_string(const std::string& s) {
  if (s == "embedding-cosine") return SimBackend::EmbeddingCosine;
  if (s == "token-f1") return SimBackend::TokenF1;
  throw ConfigError("unknown similarity backend '" + s + "'");
}

struct QualityConfig {
  int top_k = 3;
  SimBackend sim = SimBackend::EmbeddingCosine;
  std::string summarize_template = "summarize";
  std::size_t max_table_chars = kDefaultMaxFlatChars;
};

/// How many insights the critic rejected, overall and per aspect.
struct FilterReport {
  struct AspectCounts {
    int aspect_index = 0;
    int total = 0;
    int refuted = 0;
  };
  std::vector<AspectCounts> per_aspect;
  int total = 0;
  int refuted = 0;

  double refusal_rate() const {
    return total == 0 ? 0.0 : static_cast<double>(refuted) / static_cast<double>(total);
  }
};

inline void to_json(json& j, const FilterReport& r) {
  json aspects = json::array();
  for (const auto& a : r.per_aspect)
    aspects.push_back({{"aspect", a.aspect_index}, {"total", a.total}, {"refuted", a.refuted}});
  j = json{{"per_aspect", aspects},
           {"total", r.total},
           {"refuted", r.refuted},
           {"refusal_rate", r.refusal_rate()}};
}

struct VerifyResult {
  AugmentedRecord record;
  FilterReport report;
};

/// Runs every insight past the critic.  Refuted insights are removed;
/// survivors are tagged entailed.  Aspects left with no triples disappear
/// from the record.
inline VerifyResult verify_factuality(Gateway& gateway, const AugmentedRecord& input) {
  if (!input.has_stage(Stage::Mined))
    throw std::invalid_argument("record has not been mined; nothing to verify");

  VerifyResult result;
  result.record = input;
  result.record.knowledge.triples.clear();

  std::string flat = serialize_table(input.table).text;
  std::map<int, FilterReport::AspectCounts> counts;
  for (const auto& aspect : input.knowledge.aspects)
    counts[aspect.index] = {aspect.index, 0, 0};

  for (const auto& tr : input.knowledge.triples) {
    auto& c = counts[tr.question.aspect_index];
    c.aspect_index = tr.question.aspect_index;
    ++c.total;
    ++result.report.total;
    CriticVerdict verdict = gateway.classify_factuality(flat, tr.insight.text);
    if (verdict.label == Factuality::Refuted) {
      ++c.refuted;
      ++result.report.refuted;
      continue;
    }
    KnowledgeTriple kept = tr;
    kept.insight.factuality = Factuality::Entailed;
    result.record.knowledge.triples.push_back(std::move(kept));
  }

  for (const auto& [_, c] : counts) result.report.per_aspect.push_back(c);

  std::vector<Aspect> surviving;
  for (const auto& aspect : result.record.knowledge.aspects) {
    bool any = std::any_of(result.record.knowledge.triples.begin(),
                           result.record.knowledge.triples.end(),
                           [&](const KnowledgeTriple& tr) {
                             return tr.question.aspect_index == aspect.index;
                           });
    if (any) surviving.push_back(aspect);
  }
  result.record.knowledge.aspects = std::move(surviving);
  result.record.mark_stage(Stage::Verified);
  return result;
}

/// (aspect index, question index) -> leave-one-out importance score.
using TripleKey = std::pair<int, int>;
using ScoreTable = std::map<TripleKey, double>;

inline TripleKey key_of(const KnowledgeTriple& tr) {
  return {tr.question.aspect_index, tr.question.question_index};
}

namespace detail {

inline KnowledgeSet without_triple(const KnowledgeSet& ks, std::size_t skip) {
  KnowledgeSet out;
  out.aspects = ks.aspects;
  for (std::size_t i = 0; i < ks.triples.size(); ++i)
    if (i != skip) out.triples.push_back(ks.triples[i]);
  return out;
}

}  // namespace detail

/// Leave-one-out importance: for each insight i, summarize the table with
/// every insight except i and score −similarity(ablated summary, reference
/// summary).  The more the summary degrades without i, the lower the
/// similarity and the higher the score.  Makes exactly one summarizer call
/// per insight.
inline ScoreTable importance_scores(Gateway& gateway, const PromptLibrary& prompts,
                                    const AugmentedRecord& record,
                                    const QualityConfig& cfg = {}) {
  if (!record.has_stage(Stage::Verified))
    throw std::invalid_argument("record has not been verified; score after verification");
  if (record.knowledge.triples.empty())
    throw std::invalid_argument("record has no insights to score");

  const PromptTemplate& tmpl = prompts.get(cfg.summarize_template);
  require_placeholders(tmpl, {"table", "knowledge"});
  std::string flat = serialize_table(record.table, cfg.max_table_chars).text;

  ScoreTable scores;
  for (std::size_t i = 0; i < record.knowledge.triples.size(); ++i) {
    KnowledgeSet ablated = detail::without_triple(record.knowledge, i);
    std::string prompt = render_prompt(
        tmpl, {{"table", flat}, {"knowledge", render_knowledge_block(ablated)}});
    std::string ablated_summary = gateway.chat_prompt(Role::Summarizer, prompt).completion;

    double sim;
    if (cfg.sim == SimBackend::TokenF1) {
      sim = token_f1(ablated_summary, record.reference_summary);
    } else {
      sim = cosine_similarity(gateway.embed(Role::Embedder, ablated_summary),
                              gateway.embed(Role::Embedder, record.reference_summary));
    }
    scores[key_of(record.knowledge.triples[i])] = -sim;
  }
  return scores;
}

/// Rebuilds a score table from scores already stored on the insights.
inline ScoreTable scores_of(const AugmentedRecord& record) {
  ScoreTable scores;
  for (const auto& tr : record.knowledge.triples) {
    if (!tr.insight.importance_score)
      throw UnscoredTripleError(tr.question.aspect_index, tr.question.question_index);
    scores[key_of(tr)] = *tr.insight.importance_score;
  }
  return scores;
}

/// Writes scores onto the record's insights.  Every triple must be covered.
inline AugmentedRecord apply_scores(const AugmentedRecord& record, const ScoreTable& scores) {
  AugmentedRecord out = record;
  for (auto& tr : out.knowledge.triples) {
    auto it = scores.find(key_of(tr));
    if (it == scores.end())
      throw UnscoredTripleError(tr.question.aspect_index, tr.question.question_index);
    tr.insight.importance_score = it->second;
  }
  out.mark_stage(Stage::Scored);
  return out;
}

/// Keeps the top-k triples per aspect by importance score, ties broken by
/// original question order.  Ordering within an aspect is preserved for
/// the survivors.
inline AugmentedRecord prune_top_k(const AugmentedRecord& record, const ScoreTable& scores,
                                   const QualityConfig& cfg = {}) {
  if (cfg.top_k < 1) throw ConfigError("top_k must be at least 1");

  AugmentedRecord out = apply_scores(record, scores);
  std::vector<KnowledgeTriple> kept;

  for (const auto& aspect : out.knowledge.aspects) {
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < out.knowledge.triples.size(); ++i)
      if (out.knowledge.triples[i].question.aspect_index == aspect.index) indices.push_back(i);

    std::stable_sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
      return *out.knowledge.triples[a].insight.importance_score >
             *out.knowledge.triples[b].insight.importance_score;
    });
    if (indices.size() > static_cast<std::size_t>(cfg.top_k))
      indices.resize(static_cast<std::size_t>(cfg.top_k));
    std::sort(indices.begin(), indices.end());
    for (std::size_t i : indices) kept.push_back(out.knowledge.triples[i]);
  }

  out.knowledge.triples = std::move(kept);
  out.mark_stage(Stage::Pruned);
  return out;
}

struct EnhanceResult {
  std::optional<AugmentedRecord> record;  // absent when no insight survived
  FilterReport filter;
};

/// verify -> score -> prune in one step.  A record whose insights are all
/// refuted yields an empty result rather than an error; the caller decides
/// whether that drops the record or quarantines it.  Under identical
/// fixtures the composition is idempotent: re-running it on its own output
/// reproduces that output.
inline EnhanceResult enhance(Gateway& gateway, const PromptLibrary& prompts,
                             const AugmentedRecord& record, const QualityConfig& cfg = {}) {
  EnhanceResult result;
  VerifyResult verified = verify_factuality(gateway, record);
  result.filter = verified.report;
  if (verified.record.knowledge.triples.empty()) return result;

  ScoreTable scores = importance_scores(gateway, prompts, verified.record, cfg);
  result.record = prune_top_k(verified.record, scores, cfg);
  return result;
}

}  // namespace qtp
