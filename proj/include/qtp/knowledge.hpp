#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtp/errors.hpp"
#include "qtp/evidence.hpp"
#include "qtp/table.hpp"

namespace qtp {

/// A coarse angle of the table worth summarizing, e.g. "Viewership Trends".
struct Aspect {
  int index = 0;  // 1-based, order of discovery
  std::string label;

  friend bool operator==(const Aspect&, const Aspect&) = default;
};

/// A fine-grained question under one aspect.
struct Question {
  int aspect_index = 0;
  int question_index = 0;  // 1-based within the aspect
  std::string text;

  friend bool operator==(const Question&, const Question&) = default;
};

enum class Factuality { Unverified, Entailed, Refuted };

inline std::string to_string(Factuality f) {
  switch (f) {
    case Factuality::Entailed: return "entailed";
    case Factuality::Refuted: return "refuted";
    default: return "unverified";
  }
}

inline Factuality factuality_from_string(const std::string& s) {
  if (s == "entailed") return Factuality::Entailed;
  if (s == "refuted") return Factuality::Refuted;
  if (s == "unverified") return Factuality::Unverified;
  throw Error("unknown factuality label '" + s + "'");
}

struct Insight {
  std::string text;
  Factuality factuality = Factuality::Unverified;
  std::optional<double> importance_score;  // present only after scoring

  friend bool operator==(const Insight&, const Insight&) = default;
};

/// One mined (question, evidence, insight) unit.  `evidence` is absent when
/// the teacher's evidence text did not parse; such raw-only triples survive
/// the pipeline but are excluded from evidence validation and from
/// evidence-formatted training data.
struct KnowledgeTriple {
  Question question;
  std::optional<CellEvidence> evidence;
  std::string evidence_raw;
  Insight insight;

  friend bool operator==(const KnowledgeTriple&, const KnowledgeTriple&) = default;
};

struct KnowledgeSet {
  std::vector<Aspect> aspects;
  std::vector<KnowledgeTriple> triples;

  friend bool operator==(const KnowledgeSet&, const KnowledgeSet&) = default;
};

/// Checks the structural invariants: every triple's aspect index names an
/// aspect, aspect indices are unique, and (aspect, question) pairs are
/// unique across triples.
inline void validate_knowledge_set(const KnowledgeSet& ks) {
  std::vector<int> aspect_indices;
  for (const auto& a : ks.aspects) {
    if (std::find(aspect_indices.begin(), aspect_indices.end(), a.index) != aspect_indices.end())
      throw Error("duplicate aspect index " + std::to_string(a.index));
    aspect_indices.push_back(a.index);
  }
  std::vector<std::pair<int, int>> seen;
  for (const auto& tr : ks.triples) {
    if (std::find(aspect_indices.begin(), aspect_indices.end(), tr.question.aspect_index) ==
        aspect_indices.end())
      throw Error("triple references unknown aspect index " +
                  std::to_string(tr.question.aspect_index));
    auto key = std::make_pair(tr.question.aspect_index, tr.question.question_index);
    if (std::find(seen.begin(), seen.end(), key) != seen.end())
      throw Error("duplicate question index " + std::to_string(key.second) +
                  " under aspect " + std::to_string(key.first));
    seen.push_back(key);
  }
}

/// Pipeline stages a record has passed through, in order.
enum class Stage { Mined, Verified, Scored, Pruned };

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::Mined: return "mined";
    case Stage::Verified: return "verified";
    case Stage::Scored: return "scored";
    case Stage::Pruned: return "pruned";
  }
  return "?";
}

inline Stage stage_from_string(const std::string& s) {
  if (s == "mined") return Stage::Mined;
  if (s == "verified") return Stage::Verified;
  if (s == "scored") return Stage::Scored;
  if (s == "pruned") return Stage::Pruned;
  throw Error("unknown stage tag '" + s + "'");
}

/// A corpus record after mining: the table, its reference summary, and the
/// mined knowledge, with provenance tags recording which stages ran.
struct AugmentedRecord {
  Table table;
  std::string reference_summary;
  KnowledgeSet knowledge;
  std::vector<Stage> provenance;

  const std::string& table_id() const { return table.source_id; }

  bool has_stage(Stage s) const {
    return std::find(provenance.begin(), provenance.end(), s) != provenance.end();
  }

  /// Appends a tag unless already present; tags stay in pipeline order, each
  /// at most once, which keeps reprocessing idempotent.
  void mark_stage(Stage s) {
    if (!has_stage(s)) provenance.push_back(s);
  }
};

inline void validate_provenance(const std::vector<Stage>& tags) {
  for (std::size_t i = 1; i < tags.size(); ++i) {
    if (static_cast<int>(tags[i]) <= static_cast<int>(tags[i - 1]))
      throw Error("provenance tags out of pipeline order");
  }
}

// ---------------------------------------------------------------------------
// JSON codec.  Evidence columns/rows serialize as the string "all" or as an
// array, mirroring the text grammar's sentinel.

inline void to_json(json& j, const Aspect& a) {
  j = json{{"index", a.index}, {"label", a.label}};
}

inline void from_json(const json& j, Aspect& a) {
  a.index = j.at("index").get<int>();
  a.label = j.at("label").get<std::string>();
}

inline json evidence_to_json(const CellEvidence& e) {
  json j;
  j["cols"] = e.all_columns ? json("all") : json(e.columns);
  if (e.has_row_clause)
    j["rows"] = e.all_rows ? json("all") : json(e.rows);
  else
    j["rows"] = nullptr;
  return j;
}

inline CellEvidence evidence_from_json(const json& j) {
  CellEvidence e;
  if (j.at("cols").is_string()) {
    if (!iequals(j["cols"].get<std::string>(), "all"))
      throw Error("evidence cols must be \"all\" or an array");
    e.all_columns = true;
  } else {
    e.columns = j["cols"].get<std::vector<std::string>>();
  }
  if (!j.contains("rows") || j["rows"].is_null()) {
    e.has_row_clause = false;
  } else if (j["rows"].is_string()) {
    if (!iequals(j["rows"].get<std::string>(), "all"))
      throw Error("evidence rows must be \"all\", null, or an array");
    e.has_row_clause = true;
    e.all_rows = true;
  } else {
    e.has_row_clause = true;
    e.rows = j["rows"].get<std::vector<int>>();
  }
  return e;
}

inline void to_json(json& j, const KnowledgeTriple& tr) {
  j = json{{"aspect", tr.question.aspect_index},
           {"qidx", tr.question.question_index},
           {"question", tr.question.text},
           {"evidence_raw", tr.evidence_raw},
           {"evidence", tr.evidence ? evidence_to_json(*tr.evidence) : json(nullptr)},
           {"insight", tr.insight.text},
           {"factuality", to_string(tr.insight.factuality)},
           {"score", tr.insight.importance_score ? json(*tr.insight.importance_score) : json(nullptr)}};
}

inline void from_json(const json& j, KnowledgeTriple& tr) {
  tr.question.aspect_index = j.at("aspect").get<int>();
  tr.question.question_index = j.at("qidx").get<int>();
  tr.question.text = j.at("question").get<std::string>();
  tr.evidence_raw = j.value("evidence_raw", "");
  if (j.contains("evidence") && !j["evidence"].is_null()) {
    tr.evidence = evidence_from_json(j["evidence"]);
    tr.evidence->raw = tr.evidence_raw;
  } else {
    tr.evidence.reset();
  }
  tr.insight.text = j.at("insight").get<std::string>();
  tr.insight.factuality = factuality_from_string(j.value("factuality", "unverified"));
  if (j.contains("score") && !j["score"].is_null())
    tr.insight.importance_score = j["score"].get<double>();
}

inline void to_json(json& j, const KnowledgeSet& ks) {
  j = json{{"aspects", ks.aspects}, {"triples", ks.triples}};
}

inline void from_json(const json& j, KnowledgeSet& ks) {
  ks.aspects = j.at("aspects").get<std::vector<Aspect>>();
  ks.triples = j.at("triples").get<std::vector<KnowledgeTriple>>();
  validate_knowledge_set(ks);
}

inline void to_json(json& j, const AugmentedRecord& rec) {
  std::vector<std::string> tags;
  for (Stage s : rec.provenance) tags.push_back(to_string(s));
  j = json{{"table_id", rec.table.source_id},
           {"table", rec.table},
           {"summary", rec.reference_summary},
           {"knowledge", rec.knowledge},
           {"provenance", tags}};
}

inline void from_json(const json& j, AugmentedRecord& rec) {
  rec.table = j.at("table").get<Table>();
  rec.table.source_id = j.at("table_id").get<std::string>();
  rec.reference_summary = j.value("summary", "");
  rec.knowledge = j.at("knowledge").get<KnowledgeSet>();
  rec.provenance.clear();
  for (const auto& tag : j.at("provenance"))
    rec.provenance.push_back(stage_from_string(tag.get<std::string>()));
  validate_provenance(rec.provenance);
}

// ---------------------------------------------------------------------------
// Raw corpus records, before mining.

struct QueryPair {
  std::string query;
  std::string summary;

  friend bool operator==(const QueryPair&, const QueryPair&) = default;
};

/// An input corpus line: a table plus either a single reference summary or
/// a list of query-focused summaries (or both).
struct CorpusRecord {
  Table table;
  std::string summary;
  std::vector<QueryPair> queries;

  const std::string& table_id() const { return table.source_id; }
};

inline void to_json(json& j, const QueryPair& q) {
  j = json{{"query", q.query}, {"summary", q.summary}};
}

inline void from_json(const json& j, QueryPair& q) {
  q.query = j.at("query").get<std::string>();
  q.summary = j.at("summary").get<std::string>();
}

inline void to_json(json& j, const CorpusRecord& rec) {
  j = json{{"table_id", rec.table.source_id},
           {"table", rec.table},
           {"summary", rec.summary}};
  if (!rec.queries.empty()) j["queries"] = rec.queries;
}

inline void from_json(const json& j, CorpusRecord& rec) {
  rec.table = j.at("table").get<Table>();
  rec.table.source_id = j.at("table_id").get<std::string>();
  rec.summary = j.value("summary", "");
  if (j.contains("queries")) rec.queries = j["queries"].get<std::vector<QueryPair>>();
}

}  // namespace qtp
