#pragma once

#include <algorithm>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qtp/errors.hpp"
#include "qtp/logging.hpp"
#include "qtp/strings.hpp"
#include "qtp/table.hpp"

namespace qtp {

inline constexpr std::string_view kEvidencePrefix =
    "The relevant columns and rows for the Question is ";

/// Cell evidence: which columns and rows of a table ground an insight.
/// Either list may be the ALL sentinel ("col(all)" / "row(all)") instead of
/// an enumeration; a missing row() clause means rows were not narrowed.
struct CellEvidence {
  bool all_columns = false;
  std::vector<std::string> columns;  // empty when all_columns
  bool all_rows = false;
  std::vector<int> rows;             // 1-based, empty when all_rows
  bool has_row_clause = false;
  std::string raw;                   // text this was parsed from, if any

  friend bool operator==(const CellEvidence& a, const CellEvidence& b) {
    return a.all_columns == b.all_columns && a.columns == b.columns &&
           a.all_rows == b.all_rows && a.rows == b.rows &&
           a.has_row_clause == b.has_row_clause;
  }
};

namespace detail {

struct EvidenceCursor {
  std::string_view text;
  std::size_t pos = 0;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  void skip_spaces() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos;
  }
  bool consume_icase(std::string_view literal) {
    if (istarts_with(text.substr(pos), literal)) {
      pos += literal.size();
      return true;
    }
    return false;
  }
};

// Splits the "(...)" interior on commas.  Returns trimmed pieces.
inline std::vector<std::string_view> split_list(std::string_view interior) {
  std::vector<std::string_view> items;
  for (std::string_view piece : split(interior, ',')) items.push_back(trim(piece));
  return items;
}

}  // namespace detail

/// Parses an evidence expression starting at the beginning of `text`,
/// stopping after the expression's closing ")" and optional trailing
/// period.  Returns the number of bytes consumed.  Grammar:
///
///   ["The relevant columns and rows for the Question is "]
///   "col(" name-list ")" ["," "row(" int-list ")"] ["."]
///
/// "all" (any case) in either list selects the ALL sentinel.  Duplicate
/// row indices are deduplicated with a warning rather than rejected.
inline std::size_t parse_evidence_prefix(std::string_view text, CellEvidence& out) {
  detail::EvidenceCursor cur{text};
  out = CellEvidence{};
  cur.skip_spaces();
  cur.consume_icase(trim(kEvidencePrefix));
  cur.skip_spaces();

  if (!cur.consume_icase("col"))
    throw EvidenceParseError(cur.pos, "expected 'col('");
  cur.skip_spaces();
  if (cur.done() || cur.peek() != '(')
    throw EvidenceParseError(cur.pos, "expected '(' after 'col'");
  ++cur.pos;
  std::size_t close = cur.text.find(')', cur.pos);
  if (close == std::string_view::npos)
    throw EvidenceParseError(cur.pos, "unclosed 'col(' list");
  std::string_view col_interior = cur.text.substr(cur.pos, close - cur.pos);
  cur.pos = close + 1;

  bool saw_name = false;
  for (std::string_view item : detail::split_list(col_interior)) {
    if (item.empty()) continue;
    saw_name = true;
    if (iequals(item, "all")) {
      out.all_columns = true;
    } else {
      out.columns.emplace_back(item);
    }
  }
  if (!saw_name)
    throw EvidenceParseError(close, "col() names no columns");
  if (out.all_columns) out.columns.clear();

  std::size_t after_cols = cur.pos;
  cur.skip_spaces();
  bool comma = !cur.done() && cur.peek() == ',';
  if (comma) {
    ++cur.pos;
    cur.skip_spaces();
  }
  if (cur.consume_icase("row")) {
    cur.skip_spaces();
    if (cur.done() || cur.peek() != '(')
      throw EvidenceParseError(cur.pos, "expected '(' after 'row'");
    ++cur.pos;
    close = cur.text.find(')', cur.pos);
    if (close == std::string_view::npos)
      throw EvidenceParseError(cur.pos, "unclosed 'row(' list");
    std::string_view row_interior = cur.text.substr(cur.pos, close - cur.pos);
    cur.pos = close + 1;

    out.has_row_clause = true;
    bool saw_index = false;
    for (std::string_view item : detail::split_list(row_interior)) {
      if (item.empty()) continue;
      saw_index = true;
      if (iequals(item, "all")) {
        out.all_rows = true;
        continue;
      }
      int value = 0;
      auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
      if (ec != std::errc() || ptr != item.data() + item.size())
        throw EvidenceParseError(close, "row index '" + std::string(item) + "' is not an integer");
      if (value < 1)
        throw EvidenceParseError(close, "row index " + std::to_string(value) + " is not positive");
      if (std::find(out.rows.begin(), out.rows.end(), value) != out.rows.end()) {
        warn("duplicate row index " + std::to_string(value) + " in evidence; keeping first");
        continue;
      }
      out.rows.push_back(value);
    }
    if (!saw_index)
      throw EvidenceParseError(close, "row() names no rows");
    if (out.all_rows) out.rows.clear();
  } else if (comma) {
    // The comma belonged to something after the evidence, not to a row
    // clause; hand it back.
    cur.pos = after_cols;
  }

  if (!cur.done() && cur.peek() == '.') ++cur.pos;
  out.raw = std::string(text.substr(0, cur.pos));
  return cur.pos;
}

/// Strict whole-string variant: trailing content after the expression
/// (beyond whitespace) is an error.
inline CellEvidence parse_evidence(std::string_view text) {
  CellEvidence out;
  std::size_t consumed = parse_evidence_prefix(text, out);
  std::string_view rest = trim(text.substr(consumed));
  if (!rest.empty())
    throw EvidenceParseError(consumed, "unexpected trailing text '" + std::string(rest.substr(0, 32)) + "'");
  out.raw = std::string(trim(text));
  return out;
}

/// Canonical rendering; parse_evidence(render_evidence(e)) == e.
inline std::string render_evidence(const CellEvidence& e) {
  std::string out(kEvidencePrefix);
  out += "col(";
  if (e.all_columns) {
    out += "all";
  } else {
    for (std::size_t i = 0; i < e.columns.size(); ++i) {
      if (i) out += ", ";
      out += e.columns[i];
    }
  }
  out += ")";
  if (e.has_row_clause) {
    out += ", row(";
    if (e.all_rows) {
      out += "all";
    } else {
      for (std::size_t i = 0; i < e.rows.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(e.rows[i]);
      }
    }
    out += ")";
  }
  out += ".";
  return out;
}

/// Per-item outcome of checking evidence against a concrete table.
struct EvidenceValidation {
  struct ColumnCheck {
    std::string name;                          // as written in the evidence
    std::optional<std::string> matched_header; // header it resolved to
  };
  struct RowCheck {
    int index;
    bool in_range;
  };
  std::vector<ColumnCheck> columns;
  std::vector<RowCheck> rows;
  bool valid = true;
};

/// Matches column names against headers by normalized equality (lowercase,
/// collapsed whitespace) and checks row indices against the row count.
/// ALL sentinels are always valid.  Purely diagnostic: never throws.
inline EvidenceValidation validate_evidence(const CellEvidence& e, const Table& t) {
  EvidenceValidation report;
  if (!e.all_columns) {
    for (const auto& name : e.columns) {
      EvidenceValidation::ColumnCheck check{name, std::nullopt};
      std::string wanted = normalize_name(name);
      for (const auto& header : t.column_headers) {
        if (normalize_name(header) == wanted) {
          check.matched_header = header;
          break;
        }
      }
      if (!check.matched_header) report.valid = false;
      report.columns.push_back(std::move(check));
    }
  }
  if (!e.all_rows) {
    for (int idx : e.rows) {
      bool ok = idx >= 1 && static_cast<std::size_t>(idx) <= t.row_count();
      if (!ok) report.valid = false;
      report.rows.push_back({idx, ok});
    }
  }
  return report;
}

}  // namespace qtp
