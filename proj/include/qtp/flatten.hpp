#pragma once

#include <charconv>
#include <string>
#include <string_view>

#include "qtp/table.hpp"

namespace qtp {

/// Default ceiling on flattened-table length: an 8,192-token context
/// budgeted at roughly four characters per token.
inline constexpr std::size_t kDefaultMaxFlatChars = 8192 * 4;

struct FlatTable {
  std::string text;
  std::string table_id;
};

/// Escapes a cell (or title, or header) for embedding in a flattened line.
/// Backslash must go first so the other sequences stay unambiguous:
///   "\"  -> "\\"      "|" -> "\p"      newline -> "\n"
inline std::string escape_cell(std::string_view cell) {
  std::string out;
  out.reserve(cell.size());
  for (char c : cell) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '|': out += "\\p"; break;
      case '\n': out += "\\n"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

/// Inverse of escape_cell.  Unknown escape sequences and a trailing lone
/// backslash pass through literally, so hand-written text parses leniently;
/// every sequence escape_cell emits round-trips exactly.
inline std::string unescape_cell(std::string_view cell) {
  std::string out;
  out.reserve(cell.size());
  for (std::size_t i = 0; i < cell.size(); ++i) {
    if (cell[i] == '\\' && i + 1 < cell.size()) {
      char next = cell[i + 1];
      if (next == '\\') {
        out.push_back('\\');
        ++i;
        continue;
      }
      if (next == 'p') {
        out.push_back('|');
        ++i;
        continue;
      }
      if (next == 'n') {
        out.push_back('\n');
        ++i;
        continue;
      }
    }
    out.push_back(cell[i]);
  }
  return out;
}

/// Renders a table in the prompt-facing line format:
///
///   title : <title>          (only when the title is nonempty)
///   col : h1 | h2 | h3
///   row 1 : c1 | c2 | c3
///   row 2 : ...
///
/// Lines are joined with single newlines and there is no trailing newline.
/// Throws TableTooLongError when the rendering exceeds max_chars.
inline FlatTable serialize_table(const Table& t, std::size_t max_chars = kDefaultMaxFlatChars) {
  validate_table(t);
  std::string out;
  if (!t.title.empty()) {
    out += "title : ";
    out += escape_cell(t.title);
    out += '\n';
  }
  out += "col : ";
  for (std::size_t c = 0; c < t.column_headers.size(); ++c) {
    if (c) out += " | ";
    out += escape_cell(t.column_headers[c]);
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out += "\nrow ";
    out += std::to_string(r + 1);
    out += " : ";
    for (std::size_t c = 0; c < t.rows[r].size(); ++c) {
      if (c) out += " | ";
      out += escape_cell(t.rows[r][c]);
    }
  }
  if (out.size() > max_chars) throw TableTooLongError(out.size(), max_chars);
  return FlatTable{std::move(out), t.source_id};
}

namespace detail {

inline std::vector<std::string> parse_cell_list(std::string_view rest) {
  std::vector<std::string> cells;
  for (std::string_view piece : split(rest, '|'))
    cells.emplace_back(unescape_cell(trim_spaces(piece)));
  return cells;
}

}  // namespace detail

/// Parses text in the serialize_table format back into a Table.  Only the
/// spaces introduced by the " | " and " : " separators are stripped; cell
/// content is otherwise preserved, so parse(serialize(t)) == t for any
/// table whose cells carry no leading or trailing spaces of their own.
inline Table parse_flat_table(std::string_view text, std::string table_id = "") {
  Table t;
  t.source_id = std::move(table_id);

  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw GrammarError(1, "empty input; expected a 'col :' line");

  std::size_t li = 0;
  std::string_view line = lines[li];
  if (line.starts_with("title :")) {
    std::string_view rest = line.substr(7);
    if (rest.starts_with(' ')) rest.remove_prefix(1);
    t.title = unescape_cell(trim_spaces(rest));
    ++li;
    if (li >= lines.size()) throw GrammarError(li + 1, "expected a 'col :' line after the title");
    line = lines[li];
  }

  if (!line.starts_with("col :"))
    throw GrammarError(li + 1, "expected 'col : <headers>', found '" + std::string(line.substr(0, 32)) + "'");
  t.column_headers = detail::parse_cell_list(line.substr(5));
  if (t.column_headers.empty() ||
      (t.column_headers.size() == 1 && t.column_headers[0].empty()))
    throw EmptyHeaderError();
  ++li;

  std::size_t expected_row = 1;
  for (; li < lines.size(); ++li) {
    line = lines[li];
    if (!line.starts_with("row "))
      throw GrammarError(li + 1, "expected 'row <i> : <cells>', found '" + std::string(line.substr(0, 32)) + "'");
    std::string_view rest = line.substr(4);
    std::size_t colon = rest.find(" : ");
    std::size_t index_end = colon;
    if (colon == std::string_view::npos) {
      // Tolerate a row with empty cells rendered as "row 3 : " at line end.
      if (rest.ends_with(" : ") || rest.ends_with(" :")) {
        index_end = rest.find(' ');
      } else {
        throw GrammarError(li + 1, "missing ' : ' separator in row line");
      }
    }
    std::string_view index_text = trim_spaces(rest.substr(0, index_end));
    std::size_t index = 0;
    auto [ptr, ec] = std::from_chars(index_text.data(), index_text.data() + index_text.size(), index);
    if (ec != std::errc() || ptr != index_text.data() + index_text.size())
      throw GrammarError(li + 1, "row index '" + std::string(index_text) + "' is not an integer");
    if (index != expected_row) throw RowIndexGapError(expected_row, index);
    ++expected_row;

    std::string_view cells_text =
        colon == std::string_view::npos ? std::string_view{} : rest.substr(colon + 3);
    t.rows.push_back(detail::parse_cell_list(cells_text));
    if (t.rows.back().size() != t.column_headers.size())
      throw GrammarError(li + 1, "row " + std::to_string(index) + " has " +
                                     std::to_string(t.rows.back().size()) + " cells, expected " +
                                     std::to_string(t.column_headers.size()));
  }

  return t;
}

}  // namespace qtp
