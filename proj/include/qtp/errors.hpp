#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qtp {

/// Base class for every error thrown by this library.  Each subclass keeps
/// the fields a caller needs to react programmatically; what() always
/// carries a human-readable rendering of the same information.
struct Error : public std::runtime_error {
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

// ---------------------------------------------------------------------------
// Table construction and flattening

struct DecodeError : public Error {
  std::size_t byte_offset;
  explicit DecodeError(std::size_t offset)
      : Error("invalid UTF-8 byte sequence at offset " + std::to_string(offset)),
        byte_offset(offset) {}
};

struct RaggedRowError : public Error {
  std::size_t row_index;  // 1-based
  std::size_t expected_cells;
  std::size_t found_cells;
  RaggedRowError(std::size_t row, std::size_t expected, std::size_t found)
      : Error("row " + std::to_string(row) + " has " + std::to_string(found) +
              " cells, expected " + std::to_string(expected)),
        row_index(row), expected_cells(expected), found_cells(found) {}
};

struct EmptyHeaderError : public Error {
  EmptyHeaderError() : Error("table has no column headers") {}
};

struct TableTooLongError : public Error {
  std::size_t length;
  std::size_t limit;
  TableTooLongError(std::size_t length_, std::size_t limit_)
      : Error("flattened table is " + std::to_string(length_) +
              " characters, limit is " + std::to_string(limit_)),
        length(length_), limit(limit_) {}
};

struct GrammarError : public Error {
  std::size_t line_number;  // 1-based
  std::string reason;
  GrammarError(std::size_t line, std::string reason_)
      : Error("line " + std::to_string(line) + ": " + reason_),
        line_number(line), reason(std::move(reason_)) {}
};

struct RowIndexGapError : public Error {
  std::size_t expected_index;
  std::size_t found_index;
  RowIndexGapError(std::size_t expected, std::size_t found)
      : Error("row indices must be consecutive from 1: expected row " +
              std::to_string(expected) + ", found row " + std::to_string(found)),
        expected_index(expected), found_index(found) {}
};

// ---------------------------------------------------------------------------
// Evidence mini-language

struct EvidenceParseError : public Error {
  std::size_t position;  // byte offset into the evidence string
  std::string reason;
  EvidenceParseError(std::size_t position_, std::string reason_)
      : Error("evidence parse error at offset " + std::to_string(position_) +
              ": " + reason_),
        position(position_), reason(std::move(reason_)) {}
};

// ---------------------------------------------------------------------------
// Model gateway

struct TransportError : public Error {
  explicit TransportError(const std::string& detail)
      : Error("transport failure: " + detail) {}
};

struct RateLimitedError : public Error {
  int attempts;
  explicit RateLimitedError(int attempts_)
      : Error("request still rate-limited after " + std::to_string(attempts_) +
              " attempts"),
        attempts(attempts_) {}
};

struct MalformedResponseError : public Error {
  explicit MalformedResponseError(const std::string& detail)
      : Error("malformed backend response: " + detail) {}
};

/// Raised by the scripted backend when a request's fingerprint has no fixture.
/// Replay runs must never touch the network, so an unknown request is fatal.
struct CacheMissInReplayError : public Error {
  std::string fingerprint;
  explicit CacheMissInReplayError(std::string fingerprint_)
      : Error("no scripted fixture for request fingerprint " + fingerprint_),
        fingerprint(std::move(fingerprint_)) {}
};

struct EmbedInputError : public Error {
  EmbedInputError() : Error("cannot embed empty text") {}
};

struct DimensionMismatchError : public Error {
  std::size_t left;
  std::size_t right;
  DimensionMismatchError(std::size_t left_, std::size_t right_)
      : Error("vector dimensions differ: " + std::to_string(left_) + " vs " +
              std::to_string(right_)),
        left(left_), right(right_) {}
};

struct ZeroVectorError : public Error {
  ZeroVectorError() : Error("cosine similarity is undefined for a zero vector") {}
};

// ---------------------------------------------------------------------------
// Mining and reasoning replies

struct AQParseError : public Error {
  std::string reply;
  explicit AQParseError(std::string reply_)
      : Error("could not parse any aspect/question structure from reply"),
        reply(std::move(reply_)) {}
};

struct EmptyAspectsError : public Error {
  EmptyAspectsError() : Error("reply yielded zero usable aspects") {}
};

struct EIParseError : public Error {
  std::string reason;
  explicit EIParseError(std::string reason_)
      : Error("could not parse evidence/insight reply: " + reason_),
        reason(std::move(reason_)) {}
};

struct QuestionCountMismatchError : public Error {
  std::size_t expected;
  std::size_t parsed;
  QuestionCountMismatchError(std::size_t expected_, std::size_t parsed_)
      : Error("expected " + std::to_string(expected_) +
              " evidence/insight groups, parsed " + std::to_string(parsed_)),
        expected(expected_), parsed(parsed_) {}
};

// ---------------------------------------------------------------------------
// Scoring, metrics, evaluation

struct UnscoredTripleError : public Error {
  int aspect_index;
  int question_index;
  UnscoredTripleError(int aspect, int question)
      : Error("triple (aspect " + std::to_string(aspect) + ", question " +
              std::to_string(question) + ") has no importance score"),
        aspect_index(aspect), question_index(question) {}
};

struct EmptyTextError : public Error {
  explicit EmptyTextError(const std::string& which)
      : Error(which + " text is empty after tokenization") {}
};

struct MetricParseError : public Error {
  std::string reason;
  explicit MetricParseError(std::string reason_)
      : Error("could not parse judge reply: " + reason_),
        reason(std::move(reason_)) {}
};

struct JoinError : public Error {
  std::vector<std::string> missing_ids;
  explicit JoinError(std::vector<std::string> missing)
      : Error(render(missing)), missing_ids(std::move(missing)) {}

 private:
  static std::string render(const std::vector<std::string>& ids) {
    std::string msg = "no gold record for table id(s):";
    for (const auto& id : ids) msg += " " + id;
    return msg;
  }
};

// ---------------------------------------------------------------------------
// Configuration and pipeline orchestration

struct ConfigError : public Error {
  explicit ConfigError(const std::string& detail)
      : Error("config error: " + detail) {}
};

struct MissingStageError : public Error {
  std::string stage;
  std::string path;
  MissingStageError(std::string stage_, std::string path_)
      : Error("stage '" + stage_ + "' has not produced " + path_ +
              "; run it first"),
        stage(std::move(stage_)), path(std::move(path_)) {}
};

}  // namespace qtp
