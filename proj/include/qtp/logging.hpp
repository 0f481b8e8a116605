#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace qtp {

/// Process-wide sink for non-fatal warnings (dropped reply lines,
/// deduplicated row indices, fail-closed critic verdicts, ...).  The
/// default writes to stderr; tests install a capturing sink instead.
class WarningSink {
 public:
  using Handler = std::function<void(const std::string&)>;

  static WarningSink& instance() {
    static WarningSink sink;
    return sink;
  }

  void emit(const std::string& message) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (handler_) {
      handler_(message);
    } else {
      std::cerr << "warning: " << message << '\n';
    }
  }

  void set_handler(Handler handler) {
    std::lock_guard<std::mutex> lock(mutex_);
    handler_ = std::move(handler);
  }

  void reset() { set_handler(nullptr); }

 private:
  std::mutex mutex_;
  Handler handler_;
};

inline void warn(const std::string& message) { WarningSink::instance().emit(message); }

/// RAII capture of warnings, for tests that assert on them.
class CapturedWarnings {
 public:
  CapturedWarnings() {
    WarningSink::instance().set_handler([this](const std::string& m) {
      std::lock_guard<std::mutex> lock(mutex_);
      messages_.push_back(m);
    });
  }
  ~CapturedWarnings() { WarningSink::instance().reset(); }

  std::vector<std::string> messages() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return messages_;
  }

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> messages_;
};

}  // namespace qtp
