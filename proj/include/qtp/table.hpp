#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qtp/errors.hpp"
#include "qtp/strings.hpp"

namespace qtp {

using json = nlohmann::json;

/// A rectangular table: one header row plus zero or more data rows, all
/// with the same cell count.  Cells are UTF-8 text; numeric-looking cells
/// stay text, exactly as ingested.
struct Table {
  std::string title;                           // empty when the source has none
  std::vector<std::string> column_headers;     // never empty
  std::vector<std::vector<std::string>> rows;  // each row matches header width
  std::string source_id;

  std::size_t column_count() const { return column_headers.size(); }
  std::size_t row_count() const { return rows.size(); }

  friend bool operator==(const Table&, const Table&) = default;
};

/// Throws unless the table satisfies the rectangular invariant.
inline void validate_table(const Table& t) {
  if (t.column_headers.empty()) throw EmptyHeaderError();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != t.column_headers.size())
      throw RaggedRowError(r + 1, t.column_headers.size(), t.rows[r].size());
  }
}

enum class TableFormat { Csv, Tsv, JsonGrid };

namespace detail {

inline void require_utf8(std::string_view bytes) {
  std::size_t bad = find_invalid_utf8(bytes);
  if (bad != std::string_view::npos) throw DecodeError(bad);
}

// RFC 4180 CSV: fields may be double-quoted; quoted fields may contain
// commas, newlines (LF or CRLF), and doubled quotes.  Unquoted fields end
// at the next comma or line break.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view bytes) {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_has_content = false;
  std::size_t i = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    grid.push_back(std::move(row));
    row.clear();
    row_has_content = false;
  };
  while (i < bytes.size()) {
    char c = bytes[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
    } else if (c == '"' && field.empty()) {
      in_quotes = true;
      row_has_content = true;
      ++i;
    } else if (c == ',') {
      end_field();
      row_has_content = true;
      ++i;
    } else if (c == '\r' && i + 1 < bytes.size() && bytes[i + 1] == '\n') {
      end_row();
      i += 2;
    } else if (c == '\n') {
      end_row();
      ++i;
    } else {
      field.push_back(c);
      row_has_content = true;
      ++i;
    }
  }
  if (row_has_content || !field.empty() || !row.empty()) end_row();
  return grid;
}

}  // namespace detail

/// Builds a Table from raw bytes in one of the supported formats.  The
/// first grid row becomes the header; a trailing newline does not create a
/// phantom row.  JSON grids are objects of the form
/// {"title": ..., "columns": [...], "rows": [[...], ...]}.
inline Table ingest_table(std::string_view bytes, TableFormat format,
                          std::string title = "", std::string source_id = "") {
  detail::require_utf8(bytes);
  Table t;
  t.title = std::move(title);
  t.source_id = std::move(source_id);

  if (format == TableFormat::JsonGrid) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(std::string("invalid JSON grid: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("columns") || !doc.contains("rows"))
      throw Error("JSON grid must be an object with \"columns\" and \"rows\"");
    if (doc.contains("title") && !doc["title"].is_null())
      t.title = doc["title"].get<std::string>();
    for (const auto& h : doc["columns"]) t.column_headers.push_back(h.get<std::string>());
    for (const auto& row : doc["rows"]) {
      std::vector<std::string> cells;
      for (const auto& c : row) {
        if (c.is_string())
          cells.push_back(c.get<std::string>());
        else
          cells.push_back(c.dump());
      }
      t.rows.push_back(std::move(cells));
    }
    validate_table(t);
    return t;
  }

  std::vector<std::vector<std::string>> grid;
  if (format == TableFormat::Csv) {
    grid = detail::parse_csv(bytes);
  } else {
    // TSV: no quoting convention, cells cannot contain tabs or newlines.
    for (std::string_view line : split(bytes, '\n')) {
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      std::vector<std::string> row;
      for (std::string_view cell : split(line, '\t')) row.emplace_back(cell);
      grid.push_back(std::move(row));
    }
    if (!grid.empty() && grid.back().size() == 1 && grid.back()[0].empty())
      grid.pop_back();  // trailing newline
  }

  if (grid.empty()) throw EmptyHeaderError();
  t.column_headers = std::move(grid.front());
  if (t.column_headers.empty() ||
      (t.column_headers.size() == 1 && t.column_headers[0].empty()))
    throw EmptyHeaderError();
  for (std::size_t r = 1; r < grid.size(); ++r) t.rows.push_back(std::move(grid[r]));
  validate_table(t);
  return t;
}

inline void to_json(json& j, const Table& t) {
  j = json{{"title", t.title}, {"columns", t.column_headers}, {"rows", t.rows}};
}

inline void from_json(const json& j, Table& t) {
  t.title = j.value("title", "");
  t.column_headers = j.at("columns").get<std::vector<std::string>>();
  t.rows = j.at("rows").get<std::vector<std::vector<std::string>>>();
  t.source_id = j.value("table_id", "");
  validate_table(t);
}

}  // namespace qtp
