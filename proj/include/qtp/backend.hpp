#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qtp/errors.hpp"
#include "qtp/hash.hpp"
#include "qtp/jsonl.hpp"

namespace qtp {

/// Which model a profile stands in for.  Every pipeline stage addresses a
/// role, never a concrete endpoint.
enum class Role { Teacher, Summarizer, Reasoner, Critic, Embedder, Judge };

inline std::string to_string(Role r) {
  switch (r) {
    case Role::Teacher: return "teacher";
    case Role::Summarizer: return "summarizer";
    case Role::Reasoner: return "reasoner";
    case Role::Critic: return "critic";
    case Role::Embedder: return "embedder";
    case Role::Judge: return "judge";
  }
  return "?";
}

inline Role role_from_string(const std::string& s) {
  if (s == "teacher") return Role::Teacher;
  if (s == "summarizer") return Role::Summarizer;
  if (s == "reasoner") return Role::Reasoner;
  if (s == "critic") return Role::Critic;
  if (s == "embedder") return Role::Embedder;
  if (s == "judge") return Role::Judge;
  throw ConfigError("unknown role '" + s + "'");
}

struct RetryPolicy {
  int max_attempts = 3;
  int base_backoff_ms = 500;  // doubles per attempt
};

struct BackendProfile {
  Role role = Role::Teacher;
  std::string backend_kind = "scripted";  // "scripted" | "openai"
  std::string endpoint_url;
  std::string model;
  double temperature = 0.0;
  int max_tokens = 1024;
  RetryPolicy retry;
  int concurrency = 1;
  std::string fixtures_path;               // scripted backends only
  std::string api_key_env = "OPENAI_API_KEY";
};

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// Content address of a request: everything that could change the reply is
/// hashed, so equal fingerprints mean exchangeable requests.
inline std::string request_fingerprint(const BackendProfile& profile,
                                       const std::vector<ChatMessage>& messages) {
  std::string buf = to_string(profile.role);
  buf += '\x1f';
  buf += profile.model;
  buf += '\x1f';
  char temp[32];
  std::snprintf(temp, sizeof temp, "%.6g", profile.temperature);
  buf += temp;
  buf += '\x1f';
  buf += std::to_string(profile.max_tokens);
  for (const auto& m : messages) {
    buf += '\x1e';
    buf += m.role;
    buf += '\x1f';
    buf += m.content;
  }
  return to_hex16(fnv1a64(buf));
}

inline std::string embed_fingerprint(const BackendProfile& profile, const std::string& text) {
  std::string buf = to_string(profile.role);
  buf += "\x1f";
  buf += profile.model;
  buf += "\x1e";
  buf += "embed";
  buf += "\x1e";
  buf += text;
  return to_hex16(fnv1a64(buf));
}

/// Thrown internally to signal a retryable HTTP status; the gateway's retry
/// loop converts it to RateLimitedError once attempts run out.
struct RetryableStatus : public Error {
  int status;
  explicit RetryableStatus(int status_)
      : Error("retryable HTTP status " + std::to_string(status_)), status(status_) {}
};

class Backend {
 public:
  virtual ~Backend() = default;

  /// True when complete()/embed() may leave the process (HTTP).
  virtual bool network() const = 0;

  virtual std::string complete(const BackendProfile& profile,
                               const std::vector<ChatMessage>& messages,
                               const std::string& fingerprint) = 0;

  virtual std::vector<double> embed(const BackendProfile& profile, const std::string& text) = 0;
};

/// Deterministic replay backend: answers only from registered fixtures,
/// keyed by request fingerprint (chat) or input text (embeddings).  Used
/// for every offline test and for replaying a recorded run.  Also keeps
/// enough instrumentation to assert on call counts and peak concurrency.
class ScriptedBackend : public Backend {
 public:
  bool network() const override { return false; }

  void add_chat(const std::string& fingerprint, const std::string& completion) {
    std::lock_guard<std::mutex> lock(mutex_);
    chat_fixtures_[fingerprint] = completion;
  }

  void add_embedding(const std::string& text, std::vector<double> vec) {
    std::lock_guard<std::mutex> lock(mutex_);
    embed_fixtures_[text] = std::move(vec);
  }

  /// Loads fixture lines.  Two shapes are accepted so a previous run's
  /// cache.jsonl can serve directly as a fixture file:
  ///   {"kind":"chat","fingerprint":...,"completion":...}
  ///   {"kind":"embed","text":...,"vector":[...]}
  ///   {"fingerprint":...,"role":...,"completion":...}       (cache entry)
  void load_fixtures(const std::filesystem::path& path) {
    for (const auto& rec : read_jsonl(path)) {
      if (rec.value("kind", "") == "embed") {
        add_embedding(rec.at("text").get<std::string>(),
                      rec.at("vector").get<std::vector<double>>());
      } else {
        add_chat(rec.at("fingerprint").get<std::string>(),
                 rec.at("completion").get<std::string>());
      }
    }
  }

  std::string complete(const BackendProfile&, const std::vector<ChatMessage>&,
                       const std::string& fingerprint) override {
    note_entry();
    ++chat_calls_;
    if (fail_remaining_ > 0) {
      --fail_remaining_;
      note_exit();
      throw TransportError("scripted transient failure");
    }
    std::string out;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = chat_fixtures_.find(fingerprint);
      if (it == chat_fixtures_.end()) {
        note_exit();
        throw CacheMissInReplayError(fingerprint);
      }
      out = it->second;
    }
    if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
    note_exit();
    return out;
  }

  std::vector<double> embed(const BackendProfile& profile, const std::string& text) override {
    ++embed_calls_;
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = embed_fixtures_.find(text);
    if (it == embed_fixtures_.end())
      throw CacheMissInReplayError(embed_fingerprint(profile, text));
    return it->second;
  }

  // -- instrumentation --------------------------------------------------
  int chat_calls() const { return chat_calls_.load(); }
  int embed_calls() const { return embed_calls_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }
  void set_delay_ms(int ms) { delay_ms_ = ms; }
  void fail_next(int n) { fail_remaining_ = n; }

 private:
  void note_entry() {
    int now = ++in_flight_;
    int prev = max_in_flight_.load();
    while (now > prev && !max_in_flight_.compare_exchange_weak(prev, now)) {
    }
  }
  void note_exit() { --in_flight_; }

  std::mutex mutex_;
  std::map<std::string, std::string> chat_fixtures_;
  std::map<std::string, std::vector<double>> embed_fixtures_;
  std::atomic<int> chat_calls_{0};
  std::atomic<int> embed_calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
  std::atomic<int> fail_remaining_{0};
  int delay_ms_ = 0;
};

}  // namespace qtp
