#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "qtp/errors.hpp"
#include "qtp/jsonl.hpp"

namespace qtp {

/// Bookkeeping for one pipeline stage: where records came from, where they
/// went, and why any went missing.  out_count must always equal
/// in_count - drops - quarantines, so losses are attributable.
struct StageEntry {
  std::string name;
  std::string input;
  std::string output;
  long in_count = 0;
  long out_count = 0;
  long drops = 0;
  long quarantines = 0;
  double wall_ms = 0.0;
  json extra = json::object();
};

inline const std::vector<std::string> kStageOrder = {
    "ingest", "aggregate", "mine", "verify", "score", "prune", "emit-train", "infer", "eval"};

struct RunManifest {
  std::string run_id;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<StageEntry> stages;

  /// Replaces the entry for a stage, or inserts it at its canonical
  /// pipeline position.
  void update_stage(StageEntry entry) {
    if (entry.out_count != entry.in_count - entry.drops - entry.quarantines)
      throw Error("stage '" + entry.name + "' counts do not reconcile: " +
                  std::to_string(entry.out_count) + " != " + std::to_string(entry.in_count) +
                  " - " + std::to_string(entry.drops) + " - " +
                  std::to_string(entry.quarantines));
    auto rank = [](const std::string& name) {
      auto it = std::find(kStageOrder.begin(), kStageOrder.end(), name);
      return it == kStageOrder.end() ? kStageOrder.size() : static_cast<std::size_t>(it - kStageOrder.begin());
    };
    for (auto& existing : stages) {
      if (existing.name == entry.name) {
        existing = std::move(entry);
        return;
      }
    }
    auto pos = std::find_if(stages.begin(), stages.end(), [&](const StageEntry& e) {
      return rank(e.name) > rank(entry.name);
    });
    stages.insert(pos, std::move(entry));
  }

  const StageEntry* find_stage(const std::string& name) const {
    for (const auto& s : stages)
      if (s.name == name) return &s;
    return nullptr;
  }
};

inline void to_json(json& j, const StageEntry& s) {
  j = json{{"name", s.name},         {"input", s.input},
           {"output", s.output},     {"in", s.in_count},
           {"out", s.out_count},     {"drops", s.drops},
           {"quarantines", s.quarantines}, {"wall_ms", s.wall_ms},
           {"extra", s.extra}};
}

inline void from_json(const json& j, StageEntry& s) {
  s.name = j.at("name").get<std::string>();
  s.input = j.value("input", "");
  s.output = j.value("output", "");
  s.in_count = j.at("in").get<long>();
  s.out_count = j.at("out").get<long>();
  s.drops = j.value("drops", 0L);
  s.quarantines = j.value("quarantines", 0L);
  s.wall_ms = j.value("wall_ms", 0.0);
  s.extra = j.value("extra", json::object());
}

inline void to_json(json& j, const RunManifest& m) {
  j = json{{"run_id", m.run_id},
           {"config_hash", m.config_hash},
           {"seed", m.seed},
           {"stages", m.stages}};
}

inline void from_json(const json& j, RunManifest& m) {
  m.run_id = j.at("run_id").get<std::string>();
  m.config_hash = j.value("config_hash", "");
  m.seed = j.value("seed", 0ULL);
  m.stages = j.value("stages", std::vector<StageEntry>{});
}

inline RunManifest load_or_create_manifest(const std::filesystem::path& run_dir,
                                           const std::string& config_hash_,
                                           std::uint64_t seed) {
  auto path = run_dir / "manifest.json";
  if (std::filesystem::exists(path)) {
    RunManifest m = json::parse(read_file(path)).get<RunManifest>();
    return m;
  }
  RunManifest m;
  m.run_id = run_dir.filename().string();
  m.config_hash = config_hash_;
  m.seed = seed;
  return m;
}

inline void save_manifest(const RunManifest& m, const std::filesystem::path& run_dir) {
  write_file(run_dir / "manifest.json", json(m).dump(2) + "\n");
}

}  // namespace qtp
