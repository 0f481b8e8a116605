#pragma once

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "qtp/backend.hpp"
#include "qtp/errors.hpp"
#include "qtp/jsonl.hpp"
#include "qtp/knowledge.hpp"
#include "qtp/logging.hpp"
#include "qtp/strings.hpp"

namespace qtp {

inline double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) throw DimensionMismatchError(u.size(), v.size());
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw ZeroVectorError();
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

/// One request/reply through the gateway, as recorded in the request log.
struct ChatExchange {
  std::string fingerprint;
  Role role = Role::Teacher;
  std::string completion;
  std::string source;  // "cache" | "backend"
  bool network = false;
  double latency_ms = 0.0;
};

struct CriticVerdict {
  Factuality label = Factuality::Refuted;
  std::string raw_reply;
};

inline constexpr std::string_view kDefaultCriticPrompt =
    "Decide whether the Claim is factually supported by the Table.\n"
    "\n"
    "Table:\n"
    "{table}\n"
    "\n"
    "Claim: {claim}\n"
    "\n"
    "Answer with exactly one word, Entailed or Refuted.";

namespace detail {

class Semaphore {
 public:
  explicit Semaphore(int count) : count_(count) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return count_ > 0; });
    --count_;
  }

  void release() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      ++count_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int count_;
};

struct SemaphoreGuard {
  Semaphore& sem;
  explicit SemaphoreGuard(Semaphore& s) : sem(s) { sem.acquire(); }
  ~SemaphoreGuard() { sem.release(); }
};

}  // namespace detail

struct GatewayOptions {
  bool cache_enabled = true;
  /// When set, cache.jsonl and requests.jsonl live here; an existing
  /// cache.jsonl is loaded at construction so reruns resume for free.
  std::optional<std::filesystem::path> persist_dir;
};

/// Front door for every model call in the pipeline.  Holds one profile per
/// role, addresses requests by content fingerprint, serves repeats from a
/// write-through cache, retries transient failures with exponential
/// backoff, and bounds per-role concurrency.
class Gateway {
 public:
  explicit Gateway(GatewayOptions options = {}) : options_(std::move(options)) {
    if (options_.persist_dir) {
      std::filesystem::create_directories(*options_.persist_dir);
      auto cache_path = *options_.persist_dir / "cache.jsonl";
      if (std::filesystem::exists(cache_path)) {
        for (const auto& rec : read_jsonl(cache_path))
          cache_[rec.at("fingerprint").get<std::string>()] =
              rec.at("completion").get<std::string>();
      }
    }
  }

  void set_profile(const BackendProfile& profile, std::shared_ptr<Backend> backend) {
    auto& slot = slots_[profile.role];
    slot.profile = profile;
    slot.backend = std::move(backend);
    slot.semaphore = std::make_unique<detail::Semaphore>(std::max(1, profile.concurrency));
  }

  bool has_profile(Role role) const { return slots_.count(role) > 0; }

  const BackendProfile& profile(Role role) const { return slot(role).profile; }

  std::string fingerprint(Role role, const std::vector<ChatMessage>& messages) const {
    return request_fingerprint(slot(role).profile, messages);
  }

  ChatExchange chat(Role role, const std::vector<ChatMessage>& messages) {
    auto& s = slot(role);
    ChatExchange ex;
    ex.role = role;
    ex.fingerprint = request_fingerprint(s.profile, messages);

    if (options_.cache_enabled) {
      std::lock_guard<std::mutex> lock(*mutex_);
      auto it = cache_.find(ex.fingerprint);
      if (it != cache_.end()) {
        ex.completion = it->second;
        ex.source = "cache";
        ex.network = false;
        record(ex);
        return ex;
      }
    }

    auto started = std::chrono::steady_clock::now();
    {
      detail::SemaphoreGuard guard(*s.semaphore);
      ex.completion = call_with_retry(s, messages, ex.fingerprint);
    }
    ex.latency_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - started)
                        .count();
    ex.source = "backend";
    ex.network = s.backend->network();

    if (options_.cache_enabled) store(ex.fingerprint, role, ex.completion);
    record(ex);
    return ex;
  }

  /// Convenience for the common single-user-message shape every pipeline
  /// stage uses.
  ChatExchange chat_prompt(Role role, const std::string& prompt) {
    return chat(role, {{"user", prompt}});
  }

  std::vector<double> embed(Role role, const std::string& text) {
    if (trim(text).empty()) throw EmbedInputError();
    auto& s = slot(role);
    std::string fp = embed_fingerprint(s.profile, text);

    if (options_.cache_enabled) {
      std::lock_guard<std::mutex> lock(*mutex_);
      auto it = cache_.find(fp);
      if (it != cache_.end()) {
        record({fp, role, "", "cache", false, 0.0});
        return json::parse(it->second).get<std::vector<double>>();
      }
    }

    std::vector<double> vec;
    {
      detail::SemaphoreGuard guard(*s.semaphore);
      vec = s.backend->embed(s.profile, text);
    }
    if (options_.cache_enabled) store(fp, role, json(vec).dump());
    record({fp, role, "", "backend", s.backend->network(), 0.0});
    return vec;
  }

  /// Asks the critic whether `claim` is supported by the flattened table.
  /// Fail-closed: a reply that does not clearly say "entailed" counts as
  /// refuted, with a warning, so junk replies can only ever tighten the
  /// filter.
  CriticVerdict classify_factuality(const std::string& flat_table, const std::string& claim) {
    std::string prompt(critic_prompt_);
    replace_placeholder(prompt, "{table}", flat_table);
    replace_placeholder(prompt, "{claim}", claim);
    ChatExchange ex = chat_prompt(Role::Critic, prompt);

    CriticVerdict verdict;
    verdict.raw_reply = ex.completion;
    std::string token = first_word(ex.completion);
    if (token == "entailed") {
      verdict.label = Factuality::Entailed;
    } else if (token == "refuted") {
      verdict.label = Factuality::Refuted;
    } else {
      verdict.label = Factuality::Refuted;
      warn("critic reply '" + ex.completion.substr(0, 48) +
           "' is not a recognized label; treating as refuted");
    }
    return verdict;
  }

  void set_critic_prompt(std::string prompt) { critic_prompt_ = std::move(prompt); }

  const std::vector<ChatExchange>& request_log() const { return log_; }

  int network_calls() const {
    int n = 0;
    for (const auto& ex : log_) n += ex.network ? 1 : 0;
    return n;
  }

  int calls(Role role) const {
    int n = 0;
    for (const auto& ex : log_) n += ex.role == role ? 1 : 0;
    return n;
  }

 private:
  struct Slot {
    BackendProfile profile;
    std::shared_ptr<Backend> backend;
    std::unique_ptr<detail::Semaphore> semaphore;
  };

  const Slot& slot(Role role) const {
    auto it = slots_.find(role);
    if (it == slots_.end())
      throw ConfigError("no profile configured for role '" + to_string(role) + "'");
    return it->second;
  }

  Slot& slot(Role role) {
    auto it = slots_.find(role);
    if (it == slots_.end())
      throw ConfigError("no profile configured for role '" + to_string(role) + "'");
    return it->second;
  }

  std::string call_with_retry(Slot& s, const std::vector<ChatMessage>& messages,
                              const std::string& fp) {
    const RetryPolicy& policy = s.profile.retry;
    int attempt = 0;
    bool rate_limited = false;
    std::string last_error;
    while (attempt < std::max(1, policy.max_attempts)) {
      ++attempt;
      try {
        return s.backend->complete(s.profile, messages, fp);
      } catch (const RetryableStatus& e) {
        rate_limited = e.status == 429;
        last_error = e.what();
      } catch (const TransportError& e) {
        last_error = e.what();
      }
      if (attempt < std::max(1, policy.max_attempts)) {
        auto delay = std::chrono::milliseconds(
            static_cast<long>(policy.base_backoff_ms) * (1L << (attempt - 1)));
        std::this_thread::sleep_for(delay);
      }
    }
    if (rate_limited) throw RateLimitedError(attempt);
    throw TransportError(last_error + " (after " + std::to_string(attempt) + " attempts)");
  }

  void store(const std::string& fp, Role role, const std::string& completion) {
    std::lock_guard<std::mutex> lock(*mutex_);
    cache_[fp] = completion;
    if (options_.persist_dir) {
      std::ofstream out(*options_.persist_dir / "cache.jsonl", std::ios::app);
      out << json{{"fingerprint", fp}, {"role", to_string(role)}, {"completion", completion}}.dump()
          << '\n';
    }
  }

  void record(ChatExchange ex) {
    std::lock_guard<std::mutex> lock(*log_mutex_);
    if (options_.persist_dir) {
      std::ofstream out(*options_.persist_dir / "requests.jsonl", std::ios::app);
      out << json{{"fingerprint", ex.fingerprint},
                  {"role", to_string(ex.role)},
                  {"source", ex.source},
                  {"network", ex.network},
                  {"latency_ms", ex.latency_ms}}
                 .dump()
          << '\n';
    }
    log_.push_back(std::move(ex));
  }

  static void replace_placeholder(std::string& text, std::string_view key, const std::string& value) {
    std::size_t pos;
    while ((pos = text.find(key)) != std::string::npos) text.replace(pos, key.size(), value);
  }

  static std::string first_word(std::string_view reply) {
    std::string word;
    for (char ch : reply) {
      unsigned char c = static_cast<unsigned char>(ch);
      if (std::isalpha(c)) {
        word.push_back(static_cast<char>(std::tolower(c)));
      } else if (!word.empty()) {
        break;
      }
    }
    return word;
  }

  GatewayOptions options_;
  std::map<Role, Slot> slots_;
  std::unordered_map<std::string, std::string> cache_;
  std::vector<ChatExchange> log_;
  std::string critic_prompt_{kDefaultCriticPrompt};
  // Heap-held so the gateway stays movable; a factory returns it by value.
  std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
  std::unique_ptr<std::mutex> log_mutex_ = std::make_unique<std::mutex>();
};

}  // namespace qtp
