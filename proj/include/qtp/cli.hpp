#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qtp/config.hpp"
#include "qtp/distiller.hpp"
#include "qtp/manifest.hpp"
#include "qtp/miner.hpp"
#include "qtp/quality.hpp"
#include "qtp/report.hpp"
#include "qtp/runtime.hpp"

namespace qtp::cli {

// Exit codes: 0 success, 2 configuration or usage error, 3 required input
// or stage artifact missing, 4 failure while running the pipeline.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitMissing = 3;
inline constexpr int kExitRuntime = 4;

namespace detail {

/// Exclusive per-run-directory lock so two pipeline invocations cannot
/// interleave writes.  Removed on destruction; a crash leaves a stale
/// .lock the next invocation reports by path.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& run_dir) : path_(run_dir / ".lock") {
    std::filesystem::create_directories(run_dir);
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
      throw Error("run directory is locked (" + path_.string() +
                  " exists); is another run active? Remove the file if not.");
    std::string pid = std::to_string(::getpid()) + "\n";
    ssize_t n = ::write(fd, pid.c_str(), pid.size());
    (void)n;
    ::close(fd);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;
  ~RunLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

 private:
  std::filesystem::path path_;
};

class Timer {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline bool is_fatal(const Error& e) {
  return dynamic_cast<const ConfigError*>(&e) != nullptr ||
         dynamic_cast<const TransportError*>(&e) != nullptr ||
         dynamic_cast<const RateLimitedError*>(&e) != nullptr ||
         dynamic_cast<const MalformedResponseError*>(&e) != nullptr ||
         dynamic_cast<const CacheMissInReplayError*>(&e) != nullptr ||
         dynamic_cast<const MissingStageError*>(&e) != nullptr;
}

inline void require_artifact(const std::filesystem::path& path, const std::string& producer) {
  if (!std::filesystem::exists(path)) throw MissingStageError(producer, path.string());
}

inline std::set<std::string> ids_in_jsonl(const std::filesystem::path& path) {
  std::set<std::string> ids;
  if (!std::filesystem::exists(path)) return ids;
  for (const auto& rec : read_jsonl(path)) {
    if (rec.contains("table_id")) ids.insert(rec["table_id"].get<std::string>());
  }
  return ids;
}

inline long count_jsonl(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return 0;
  return static_cast<long>(read_jsonl(path).size());
}

/// Drops one stage's lines from quarantine.jsonl before a fresh
/// (non-resume) pass, so stale failures cannot distort the counts.
inline void reset_quarantine(const std::filesystem::path& run_dir, const std::string& stage) {
  auto path = run_dir / "quarantine.jsonl";
  if (!std::filesystem::exists(path)) return;
  std::vector<json> kept;
  for (const auto& rec : read_jsonl(path)) {
    if (rec.value("stage", "") != stage) kept.push_back(rec);
  }
  write_jsonl(path, kept);
}

inline void quarantine(const std::filesystem::path& run_dir, const std::string& stage,
                       const std::string& table_id, const std::string& error) {
  JsonlWriter writer(run_dir / "quarantine.jsonl", /*append=*/true);
  writer.write(json{{"stage", stage}, {"table_id", table_id}, {"error", error}});
  warn("quarantined " + table_id + " during " + stage + ": " + error);
}

/// Distinct quarantined ids for a stage that did not make it to the
/// output; this stays correct across resumed and repeated passes.
inline long count_stage_quarantines(const std::filesystem::path& run_dir, const std::string& stage,
                                    const std::set<std::string>& output_ids) {
  auto path = run_dir / "quarantine.jsonl";
  std::set<std::string> ids;
  if (std::filesystem::exists(path)) {
    for (const auto& rec : read_jsonl(path)) {
      if (rec.value("stage", "") == stage && !output_ids.count(rec.value("table_id", "")))
        ids.insert(rec.value("table_id", ""));
    }
  }
  return static_cast<long>(ids.size());
}

inline std::vector<AugmentedRecord> load_records(const std::filesystem::path& path) {
  std::vector<AugmentedRecord> records;
  for (const auto& rec : read_jsonl(path)) records.push_back(rec.get<AugmentedRecord>());
  return records;
}

inline std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path) {
  std::vector<CorpusRecord> records;
  for (const auto& rec : read_jsonl(path)) records.push_back(rec.get<CorpusRecord>());
  return records;
}

inline void finish_stage(const PipelineConfig& cfg, StageEntry entry) {
  RunManifest manifest = load_or_create_manifest(cfg.run_dir, config_hash(cfg), cfg.seed);
  manifest.update_stage(std::move(entry));
  save_manifest(manifest, cfg.run_dir);
}

inline TableFormat format_from_name(const std::string& name) {
  if (name == "csv") return TableFormat::Csv;
  if (name == "tsv") return TableFormat::Tsv;
  if (name == "json") return TableFormat::JsonGrid;
  throw ConfigError("unknown table format '" + name + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands

inline int cmd_ingest(const PipelineConfig& cfg, const std::vector<std::string>& inputs,
                      std::string format, const std::string& table_id, const std::string& title,
                      const std::string& summary, bool append, std::ostream& out) {
  detail::RunLock lock(cfg.run_dir);
  detail::Timer timer;
  auto corpus_path = cfg.run_dir / "corpus.jsonl";

  long in_count = append ? detail::count_jsonl(corpus_path) : 0;
  JsonlWriter writer(corpus_path, append);
  long written = 0;

  for (const auto& input : inputs) {
    detail::require_artifact(input, "ingest input");
    std::string fmt = format;
    if (fmt.empty()) {
      std::string ext = std::filesystem::path(input).extension().string();
      fmt = ext.empty() ? "jsonl" : ext.substr(1);
    }
    if (fmt == "jsonl") {
      for (const auto& rec : read_jsonl(input)) {
        CorpusRecord record = rec.get<CorpusRecord>();
        writer.write(json(record));
        ++written;
      }
    } else {
      Table t = ingest_table(read_file(input), detail::format_from_name(fmt), title,
                             table_id.empty() ? std::filesystem::path(input).stem().string()
                                              : table_id);
      CorpusRecord record;
      record.table = std::move(t);
      record.summary = summary;
      writer.write(json(record));
      ++written;
    }
  }

  detail::finish_stage(cfg, StageEntry{"ingest", join(inputs, ","), corpus_path.string(),
                                       in_count + written, in_count + written, 0, 0, timer.ms(),
                                       json{{"written", written}}});
  out << "ingested " << written << " record(s) into " << corpus_path.string() << "\n";
  return kExitOk;
}

inline int cmd_aggregate(const PipelineConfig& cfg, const std::string& input, bool skip_single,
                         std::ostream& out) {
  detail::RunLock lock(cfg.run_dir);
  detail::Timer timer;
  require_roles(cfg, {Role::Teacher});
  PromptLibrary prompts(cfg.prompt_dir);
  Gateway gateway = build_gateway(cfg, /*persist=*/true, &prompts);

  std::filesystem::path input_path =
      input.empty() ? cfg.run_dir / "corpus_queries.jsonl" : std::filesystem::path(input);
  detail::require_artifact(input_path, "ingest");
  auto corpus = detail::load_corpus(input_path);

  auto corpus_path = cfg.run_dir / "corpus.jsonl";
  JsonlWriter writer(corpus_path);
  long aggregated = 0, passthrough = 0;
  for (auto& rec : corpus) {
    if (!rec.queries.empty()) {
      std::vector<std::string> summaries;
      for (const auto& q : rec.queries) summaries.push_back(q.summary);
      rec.summary = aggregate_reference_summaries(gateway, prompts, rec.table, summaries,
                                                  skip_single, cfg.max_table_chars);
      rec.queries.clear();
      ++aggregated;
    } else {
      ++passthrough;
    }
    writer.write(json(rec));
  }

  detail::finish_stage(cfg, StageEntry{"aggregate", input_path.string(), corpus_path.string(),
                                       static_cast<long>(corpus.size()),
                                       static_cast<long>(corpus.size()), 0, 0, timer.ms(),
                                       json{{"aggregated", aggregated}, {"passthrough", passthrough}}});
  out << "aggregated " << aggregated << " record(s), passed through " << passthrough << "\n";
  return kExitOk;
}

inline int cmd_mine(const PipelineConfig& cfg, bool resume, std::ostream& out) {
  detail::RunLock lock(cfg.run_dir);
  detail::Timer timer;
  require_roles(cfg, {Role::Teacher});
  PromptLibrary prompts(cfg.prompt_dir);

  auto corpus_path = cfg.run_dir / "corpus.jsonl";
  detail::require_artifact(corpus_path, "ingest");
  auto corpus = detail::load_corpus(corpus_path);

  Gateway gateway = build_gateway(cfg, /*persist=*/true, &prompts);
  MinerConfig mcfg{cfg.questions_per_aspect, "mine_aq", "mine_ei", cfg.max_table_chars};

  auto mined_path = cfg.run_dir / "mined.jsonl";
  std::set<std::string> done = resume ? detail::ids_in_jsonl(mined_path) : std::set<std::string>{};
  if (!resume) detail::reset_quarantine(cfg.run_dir, "mine");
  JsonlWriter writer(mined_path, resume);

  for (const auto& rec : corpus) {
    if (done.count(rec.table_id())) continue;
    try {
      AugmentedRecord mined = mine_record(gateway, prompts, rec, mcfg);
      writer.write(json(mined));
    } catch (const Error& e) {
      if (detail::is_fatal(e)) throw;
      detail::quarantine(cfg.run_dir, "mine", rec.table_id(), e.what());
    } catch (const std::invalid_argument& e) {
      detail::quarantine(cfg.run_dir, "mine", rec.table_id(), e.what());
    }
  }

  auto output_ids = detail::ids_in_jsonl(mined_path);
  long out_count = detail::count_jsonl(mined_path);
  long quarantines = detail::count_stage_quarantines(cfg.run_dir, "mine", output_ids);
  detail::finish_stage(cfg, StageEntry{"mine", corpus_path.string(), mined_path.string(),
                                       static_cast<long>(corpus.size()), out_count, 0, quarantines,
                                       timer.ms(), json::object()});
  out << "mined " << out_count << "/" << corpus.size() << " record(s)\n";
  return kExitOk;
}

inline int cmd_verify(const PipelineConfig& cfg, bool resume, std::ostream& out) {
  detail::RunLock lock(cfg.run_dir);
  detail::Timer timer;
  require_roles(cfg, {Role::Critic});
  PromptLibrary prompts(cfg.prompt_dir);

  auto mined_path = cfg.run_dir / "mined.jsonl";
  detail::require_artifact(mined_path, "mine");
  auto records = detail::load_records(mined_path);

  Gateway gateway = build_gateway(cfg, /*persist=*/true, &prompts);

  auto verified_path = cfg.run_dir / "verified.jsonl";
  std::set<std::string> done =
      resume ? detail::ids_in_jsonl(verified_path) : std::set<std::string>{};
  if (!resume) detail::reset_quarantine(cfg.run_dir, "verify");
  JsonlWriter writer(verified_path, resume);

  FilterReport totals;
  long dropped_empty = 0;
  for (const auto& rec : records) {
    if (done.count(rec.table_id())) continue;
    try {
      VerifyResult result = verify_factuality(gateway, rec);
      totals.total += result.report.total;
      totals.refuted += result.report.refuted;
      if (result.record.knowledge.triples.empty()) {
        ++dropped_empty;
        warn("record " + rec.table_id() + " lost every insight to the critic; dropping it");
        continue;
      }
      writer.write(json(result.record));
    } catch (const Error& e) {
      if (detail::is_fatal(e)) throw;
      detail::quarantine(cfg.run_dir, "verify", rec.table_id(), e.what());
    } catch (const std::invalid_argument& e) {
      detail::quarantine(cfg.run_dir, "verify", rec.table_id(), e.what());
    }
  }

  auto output_ids = detail::ids_in_jsonl(verified_path);
  long out_count = detail::count_jsonl(verified_path);
  long quarantines = detail::count_stage_quarantines(cfg.run_dir, "verify", output_ids);
  long in_count = static_cast<long>(records.size());
  long drops = in_count - out_count - quarantines;
  detail::finish_stage(
      cfg, StageEntry{"verify", mined_path.string(), verified_path.string(), in_count, out_count,
                      drops, quarantines, timer.ms(),
                      json{{"insights_checked", totals.total},
                           {"insights_refuted", totals.refuted},
                           {"refusal_rate", totals.refusal_rate()}}});
  out << "verified " << out_count << "/" << records.size() << " record(s); refuted "
      << totals.refuted << "/" << totals.total << " insight(s)\n";
  return kExitOk;
}

inline int cmd_score(const PipelineConfig& cfg, bool resume, std::ostream& out) {
  detail::RunLock lock(cfg.run_dir);
  detail::Timer timer;
  require_roles(cfg, {Role::Summarizer});
  if (cfg.sim_backend == SimBackend::EmbeddingCosine) require_roles(cfg, {Role::Embedder});
  PromptLibrary prompts(cfg.prompt_dir);

  auto verified_path = cfg.run_dir / "verified.jsonl";
  detail::require_artifact(verified_path, "verify");
  auto records = detail::load_records(verified_path);

  Gateway gateway = build_gateway(cfg, /*persist=*/true, &prompts);
  QualityConfig qcfg{cfg.top_k, cfg.sim_backend, "summarize", cfg.max_table_chars};

  auto scored_path = cfg.run_dir / "scored.jsonl";
  std::set<std::string> done = resume ? detail::ids_in_jsonl(scored_path) : std::set<std::string>{};
  if (!resume) detail::reset_quarantine(cfg.run_dir, "score");
  JsonlWriter writer(scored_path, resume);

  for (const auto& rec : records) {
    if (done.count(rec.table_id())) continue;
    try {
      ScoreTable scores = importance_scores(gateway, prompts, rec, qcfg);
      writer.write(json(apply_scores(rec, scores)));
    } catch (const Error& e) {
      if (detail::is_fatal(e)) throw;
      detail::quarantine(cfg.run_dir, "score", rec.table_id(), e.what());
    } catch (const std::invalid_argument& e) {
      detail::quarantine(cfg.run_dir, "score", rec.table_id(), e.what());
    }
  }

  auto output_ids = detail::ids_in_jsonl(scored_path);
  long out_count = detail::count_jsonl(scored_path);
  long quarantines = detail::count_stage_quarantines(cfg.run_dir, "score", output_ids);
  detail::finish_stage(cfg, StageEntry{"score", verified_path.string(), scored_path.string(),
                                       static_cast<long>(records.size()), out_count, 0, quarantines,
                                       timer.ms(), json::object()});
  out << "scored " << out_count << "/" << records.size() << " record(s)\n";
  return kExitOk;
}

inline int cmd_prune(const PipelineConfig& cfg, std::ostream& out) {
  detail::RunLock lock(cfg.run_dir);
  detail::Timer timer;

  auto scored_path = cfg.run_dir / "scored.jsonl";
  detail::require_artifact(scored_path, "score");
  auto records = detail::load_records(scored_path);

  QualityConfig qcfg{cfg.top_k, cfg.sim_backend, "summarize", cfg.max_table_chars};
  detail::reset_quarantine(cfg.run_dir, "prune");

  auto pruned_path = cfg.run_dir / "pruned.jsonl";
  JsonlWriter writer(pruned_path);
  long triples = 0;
  for (const auto& rec : records) {
    try {
      AugmentedRecord pruned = prune_top_k(rec, scores_of(rec), qcfg);
      triples += static_cast<long>(pruned.knowledge.triples.size());
      writer.write(json(pruned));
    } catch (const Error& e) {
      if (detail::is_fatal(e)) throw;
      detail::quarantine(cfg.run_dir, "prune", rec.table_id(), e.what());
    }
  }

  auto output_ids = detail::ids_in_jsonl(pruned_path);
  long out_count = detail::count_jsonl(pruned_path);
  long quarantines = detail::count_stage_quarantines(cfg.run_dir, "prune", output_ids);
  detail::finish_stage(cfg, StageEntry{"prune", scored_path.string(), pruned_path.string(),
                                       static_cast<long>(records.size()), out_count, 0, quarantines,
                                       timer.ms(), json{{"triples_kept", triples}}});
  out << "pruned to top-" << cfg.top_k << ": " << out_count << " record(s), " << triples
      << " triple(s)\n";
  return kExitOk;
}

inline int cmd_emit_train(const PipelineConfig& cfg, std::ostream& out) {
  detail::RunLock lock(cfg.run_dir);
  detail::Timer timer;
  PromptLibrary prompts(cfg.prompt_dir);

  auto pruned_path = cfg.run_dir / "pruned.jsonl";
  detail::require_artifact(pruned_path, "prune");
  auto records = detail::load_records(pruned_path);

  auto qg = emit_qg_records(records, prompts, cfg.max_table_chars);
  auto ig = emit_ig_records(records, prompts, cfg.max_table_chars);

  auto qg_path = cfg.run_dir / "train_qg.jsonl";
  auto ig_path = cfg.run_dir / "train_ig.jsonl";
  auto mixed_path = cfg.run_dir / "train_mixed.jsonl";
  {
    JsonlWriter w(qg_path);
    for (const auto& r : qg) w.write(json(r));
  }
  {
    JsonlWriter w(ig_path);
    for (const auto& r : ig.records) w.write(json(r));
  }
  auto mixed = shuffle_interleave(qg, ig.records, cfg.seed);
  {
    JsonlWriter w(mixed_path);
    for (const auto& r : mixed) w.write(json(r));
  }

  detail::finish_stage(
      cfg, StageEntry{"emit-train", pruned_path.string(), mixed_path.string(),
                      static_cast<long>(records.size()), static_cast<long>(records.size()), 0, 0,
                      timer.ms(),
                      json{{"qg_records", qg.size()},
                           {"ig_records", ig.records.size()},
                           {"ig_skipped_raw_only", ig.skipped_raw_only},
                           {"mixed_records", mixed.size()}}});
  out << "emitted " << qg.size() << " qg + " << ig.records.size() << " ig record(s) ("
      << ig.skipped_raw_only << " raw-only skipped), mixed " << mixed.size() << "\n";
  return kExitOk;
}

inline int cmd_infer(const PipelineConfig& cfg, const std::string& input, bool resume,
                     bool gate_evidence, std::ostream& out) {
  detail::RunLock lock(cfg.run_dir);
  detail::Timer timer;
  require_roles(cfg, {Role::Reasoner, Role::Summarizer});
  PromptLibrary prompts(cfg.prompt_dir);

  std::filesystem::path input_path =
      input.empty() ? cfg.run_dir / "corpus.jsonl" : std::filesystem::path(input);
  detail::require_artifact(input_path, "ingest");
  auto corpus = detail::load_corpus(input_path);

  Gateway gateway = build_gateway(cfg, /*persist=*/true, &prompts);
  InferenceConfig icfg;
  icfg.gate_evidence = gate_evidence || cfg.gate_evidence;
  icfg.max_table_chars = cfg.max_table_chars;

  auto inference_path = cfg.run_dir / "inference.jsonl";
  std::set<std::string> done =
      resume ? detail::ids_in_jsonl(inference_path) : std::set<std::string>{};
  if (!resume) detail::reset_quarantine(cfg.run_dir, "infer");
  JsonlWriter writer(inference_path, resume);

  for (const auto& rec : corpus) {
    if (done.count(rec.table_id())) continue;
    try {
      InferenceResult result = run_inference(gateway, prompts, rec.table, icfg);
      writer.write(json{{"table_id", rec.table_id()},
                        {"summary", result.summary},
                        {"knowledge", result.knowledge},
                        {"trace", result.trace},
                        {"gated_out", result.gated_out}});
    } catch (const Error& e) {
      if (detail::is_fatal(e)) throw;
      detail::quarantine(cfg.run_dir, "infer", rec.table_id(), e.what());
    }
  }

  long gated_total = 0;
  for (const auto& rec : read_jsonl(inference_path)) gated_total += rec.value("gated_out", 0);
  auto output_ids = detail::ids_in_jsonl(inference_path);
  long out_count = detail::count_jsonl(inference_path);
  long quarantines = detail::count_stage_quarantines(cfg.run_dir, "infer", output_ids);
  detail::finish_stage(cfg, StageEntry{"infer", input_path.string(), inference_path.string(),
                                       static_cast<long>(corpus.size()), out_count, 0, quarantines,
                                       timer.ms(), json{{"insights_gated_out", gated_total}}});
  out << "inferred " << out_count << "/" << corpus.size() << " summary(ies)\n";
  return kExitOk;
}

inline int cmd_eval(const PipelineConfig& cfg, const std::string& candidates,
                    const std::string& gold, bool surface_only, std::ostream& out) {
  detail::RunLock lock(cfg.run_dir);
  detail::Timer timer;

  std::filesystem::path cand_path =
      candidates.empty() ? cfg.run_dir / "inference.jsonl" : std::filesystem::path(candidates);
  std::filesystem::path gold_path =
      gold.empty() ? cfg.run_dir / "corpus.jsonl" : std::filesystem::path(gold);
  detail::require_artifact(cand_path, "infer");
  detail::require_artifact(gold_path, "ingest");

  std::vector<std::string> metrics = cfg.metrics;
  if (surface_only) {
    std::vector<std::string> filtered;
    for (const auto& m : metrics) {
      if (std::find(kSurfaceMetrics.begin(), kSurfaceMetrics.end(), m) != kSurfaceMetrics.end())
        filtered.push_back(m);
    }
    metrics = filtered.empty() ? kSurfaceMetrics : filtered;
  }

  bool needs_judge = std::any_of(metrics.begin(), metrics.end(), [](const std::string& m) {
    return std::find(kJudgeMetrics.begin(), kJudgeMetrics.end(), m) != kJudgeMetrics.end();
  });

  std::map<std::string, CorpusRecord> gold_by_id;
  for (auto& rec : detail::load_corpus(gold_path)) gold_by_id[rec.table_id()] = rec;

  std::vector<EvalExample> examples;
  std::vector<std::string> missing;
  for (const auto& rec : read_jsonl(cand_path)) {
    EvalExample ex;
    ex.table_id = rec.at("table_id").get<std::string>();
    ex.candidate = rec.at("summary").get<std::string>();
    auto it = gold_by_id.find(ex.table_id);
    if (it == gold_by_id.end()) {
      missing.push_back(ex.table_id);
      continue;
    }
    ex.table = it->second.table;
    ex.reference = it->second.summary;
    examples.push_back(std::move(ex));
  }
  if (!missing.empty()) throw JoinError(missing);

  MetricReport report;
  if (needs_judge) {
    require_roles(cfg, {Role::Judge});
    PromptLibrary prompts(cfg.prompt_dir);
    Gateway gateway = build_gateway(cfg, /*persist=*/true, &prompts);
    report = evaluate_examples(examples, metrics, &gateway, &prompts);
  } else {
    report = evaluate_examples(examples, metrics);
  }

  auto report_path = cfg.run_dir / "report.jsonl";
  write_report_jsonl(report, report_path);
  print_report(report, out);

  detail::finish_stage(cfg, StageEntry{"eval", cand_path.string(), report_path.string(),
                                       static_cast<long>(examples.size()),
                                       static_cast<long>(examples.size()), 0, 0, timer.ms(),
                                       json{{"aggregate", report.aggregate},
                                            {"failures", report.failures},
                                            {"tokenizer", std::string(kTokenizerVersion)}}});
  return kExitOk;
}

inline int cmd_compare(const PipelineConfig& cfg, const std::string& a_path,
                       const std::string& b_path, const std::string& gold,
                       const std::string& criterion, std::ostream& out) {
  require_roles(cfg, {Role::Judge});
  PromptLibrary prompts(cfg.prompt_dir);
  Gateway gateway = build_gateway(cfg, /*persist=*/true, &prompts);

  std::filesystem::path gold_path =
      gold.empty() ? cfg.run_dir / "corpus.jsonl" : std::filesystem::path(gold);
  detail::require_artifact(a_path, "infer (candidate A)");
  detail::require_artifact(b_path, "infer (candidate B)");
  detail::require_artifact(gold_path, "ingest");

  std::map<std::string, CorpusRecord> gold_by_id;
  for (auto& rec : detail::load_corpus(gold_path)) gold_by_id[rec.table_id()] = rec;

  auto load_candidates = [&](const std::string& path) {
    std::vector<EvalExample> examples;
    std::vector<std::string> missing;
    for (const auto& rec : read_jsonl(path)) {
      EvalExample ex;
      ex.table_id = rec.at("table_id").get<std::string>();
      ex.candidate = rec.at("summary").get<std::string>();
      auto it = gold_by_id.find(ex.table_id);
      if (it == gold_by_id.end()) {
        missing.push_back(ex.table_id);
        continue;
      }
      ex.table = it->second.table;
      ex.reference = it->second.summary;
      examples.push_back(std::move(ex));
    }
    if (!missing.empty()) throw JoinError(missing);
    return examples;
  };

  PairwiseReport report = evaluate_pairwise(load_candidates(a_path), load_candidates(b_path),
                                            gateway, prompts, "pairwise_" + criterion);
  out << "criterion=" << criterion << " a_wins=" << report.wins_a << " b_wins=" << report.wins_b
      << " ties=" << report.ties << " failures=" << report.failures << "\n";
  return kExitOk;
}

inline int cmd_stats(const PipelineConfig& cfg, const std::string& stage, std::ostream& out) {
  auto path = cfg.run_dir / (stage + ".jsonl");
  detail::require_artifact(path, stage);
  auto records = detail::load_records(path);

  long aspects = 0, triples = 0, raw_only = 0;
  for (const auto& rec : records) {
    aspects += static_cast<long>(rec.knowledge.aspects.size());
    triples += static_cast<long>(rec.knowledge.triples.size());
    for (const auto& tr : rec.knowledge.triples) raw_only += tr.evidence ? 0 : 1;
  }

  out << "stage=" << stage << "\n";
  out << "tables=" << records.size() << "\n";
  out << "aspects=" << aspects << "\n";
  out << "triples=" << triples << "\n";
  out << "raw_only_triples=" << raw_only << "\n";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f",
                aspects == 0 ? 0.0 : static_cast<double>(triples) / static_cast<double>(aspects));
  out << "triples_per_aspect=" << buf << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Argument wiring

inline int run(std::vector<std::string> args, std::ostream& out = std::cout) {
  CLI::App app{"mine, filter, distill, and evaluate table-reasoning knowledge"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> inputs;
  std::string input, format, table_id, title, summary, candidates, gold, a_path, b_path;
  std::string stage = "pruned";
  std::string criterion = "natural";
  bool resume = false, surface_only = false, gate_evidence = false, skip_single = false,
       append = false;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "pipeline config JSON")->required();
  };

  auto* ingest = app.add_subcommand("ingest", "normalize raw tables into the run corpus");
  add_config(ingest);
  ingest->add_option("--input", inputs, "input file(s): csv, tsv, json grid, or corpus jsonl")
      ->required();
  ingest->add_option("--format", format, "override format detection (csv|tsv|json|jsonl)");
  ingest->add_option("--table-id", table_id, "table id for a single raw table");
  ingest->add_option("--title", title, "table title for a single raw table");
  ingest->add_option("--summary", summary, "reference summary for a single raw table");
  ingest->add_flag("--append", append, "append to an existing corpus");

  auto* aggregate = app.add_subcommand(
      "aggregate", "fold query-focused reference summaries into table-level references");
  add_config(aggregate);
  aggregate->add_option("--input", input, "query-style corpus (default: <run>/corpus_queries.jsonl)");
  aggregate->add_flag("--skip-single", skip_single,
                      "pass single-query records through without a model call");

  auto* mine = app.add_subcommand("mine", "mine aspects, questions, evidence, and insights");
  add_config(mine);
  mine->add_flag("--resume", resume, "skip records already in the output");

  auto* verify = app.add_subcommand("verify", "filter insights the critic refutes");
  add_config(verify);
  verify->add_flag("--resume", resume, "skip records already in the output");

  auto* score = app.add_subcommand("score", "leave-one-out importance scoring");
  add_config(score);
  score->add_flag("--resume", resume, "skip records already in the output");

  auto* prune = app.add_subcommand("prune", "keep the top-k insights per aspect");
  add_config(prune);

  auto* emit = app.add_subcommand("emit-train", "emit reasoner instruction-tuning data");
  add_config(emit);

  auto* infer = app.add_subcommand("infer", "run question -> evidence -> summary inference");
  add_config(infer);
  infer->add_option("--input", input, "corpus of tables (default: <run>/corpus.jsonl)");
  infer->add_flag("--resume", resume, "skip records already in the output");
  infer->add_flag("--gate-evidence", gate_evidence,
                  "drop insights whose evidence fails table validation");

  auto* eval = app.add_subcommand("eval", "score inferred summaries against references");
  add_config(eval);
  eval->add_option("--candidates", candidates, "inference output (default: <run>/inference.jsonl)");
  eval->add_option("--gold", gold, "gold corpus (default: <run>/corpus.jsonl)");
  eval->add_flag("--surface-only", surface_only, "skip metrics that need a judge model");

  auto* compare = app.add_subcommand("compare", "pairwise-judge two inference outputs");
  add_config(compare);
  compare->add_option("--a", a_path, "candidate A inference jsonl")->required();
  compare->add_option("--b", b_path, "candidate B inference jsonl")->required();
  compare->add_option("--gold", gold, "gold corpus (default: <run>/corpus.jsonl)");
  compare->add_option("--criterion", criterion, "natural|comprehensive|informative");

  auto* stats = app.add_subcommand("stats", "print store statistics");
  add_config(stats);
  stats->add_option("--stage", stage, "stage file to inspect (default: pruned)");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    PipelineConfig cfg = load_config(config_path);
    if (ingest->parsed())
      return cmd_ingest(cfg, inputs, format, table_id, title, summary, append, out);
    if (aggregate->parsed()) return cmd_aggregate(cfg, input, skip_single, out);
    if (mine->parsed()) return cmd_mine(cfg, resume, out);
    if (verify->parsed()) return cmd_verify(cfg, resume, out);
    if (score->parsed()) return cmd_score(cfg, resume, out);
    if (prune->parsed()) return cmd_prune(cfg, out);
    if (emit->parsed()) return cmd_emit_train(cfg, out);
    if (infer->parsed()) return cmd_infer(cfg, input, resume, gate_evidence, out);
    if (eval->parsed()) return cmd_eval(cfg, candidates, gold, surface_only, out);
    if (compare->parsed()) return cmd_compare(cfg, a_path, b_path, gold, criterion, out);
    if (stats->parsed()) return cmd_stats(cfg, stage, out);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingStageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissing;
  } catch (const JoinError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

inline int main(int argc, char** argv) {
  return run(std::vector<std::string>(argv + 1, argv + argc));
}

}  // namespace qtp::cli
