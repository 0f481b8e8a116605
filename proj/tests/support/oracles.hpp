/// @file
/// @brief Independent reference implementations used to cross-check the
/// library, plus random fixture generators.  The oracles deliberately share
/// no algorithm with the code under test: LCS is found by exhaustive
/// subsequence enumeration, BLEU by direct n-gram scanning with a
/// product-form mean, top-k selection by a plain comparator sort.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "qtp/evidence.hpp"
#include "qtp/table.hpp"

namespace testsupport {

/// Longest common subsequence length by enumerating every subsequence of
/// `a` (so `a` must stay short) and testing containment in `b` greedily.
inline std::size_t oracle_lcs(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
  std::size_t best = 0;
  const std::uint32_t limit = 1u << a.size();
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    std::size_t len = 0;
    std::size_t j = 0;
    bool contained = true;
    for (std::size_t i = 0; i < a.size() && contained; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) {
        contained = false;
        break;
      }
      ++j;
      ++len;
    }
    if (contained && len > best) best = len;
  }
  return best;
}

/// ROUGE-L F1 on pre-tokenized input, driven by the exhaustive LCS above.
inline double oracle_rouge_l_f1(const std::vector<std::string>& c,
                                const std::vector<std::string>& r) {
  std::size_t lcs = c.size() <= r.size() ? oracle_lcs(c, r) : oracle_lcs(r, c);
  if (lcs == 0) return 0.0;
  return 2.0 * static_cast<double>(lcs) / static_cast<double>(c.size() + r.size());
}

/// BLEU on pre-tokenized input: modified precision found by scanning the
/// token vectors directly for every distinct candidate n-gram, folded with
/// a product-form geometric mean.  Same smoothing convention as the metric
/// under test: zero unigram matches short-circuit to 0; a higher order with
/// zero matches contributes 1/(possible+1).
inline double oracle_bleu(const std::vector<std::string>& c,
                          const std::vector<std::string>& r) {
  double product = 1.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    long total = c.size() >= n ? static_cast<long>(c.size() - n + 1) : 0;
    long matched = 0;
    std::vector<std::vector<std::string>> seen;
    for (long i = 0; i + static_cast<long>(n) <= static_cast<long>(c.size()); ++i) {
      std::vector<std::string> gram(c.begin() + i, c.begin() + i + static_cast<long>(n));
      if (std::find(seen.begin(), seen.end(), gram) != seen.end()) continue;
      seen.push_back(gram);
      long in_c = 0;
      long in_r = 0;
      for (long j = 0; j + static_cast<long>(n) <= static_cast<long>(c.size()); ++j)
        if (std::equal(gram.begin(), gram.end(), c.begin() + j)) ++in_c;
      for (long j = 0; j + static_cast<long>(n) <= static_cast<long>(r.size()); ++j)
        if (std::equal(gram.begin(), gram.end(), r.begin() + j)) ++in_r;
      matched += std::min(in_c, in_r);
    }
    double p;
    if (n == 1) {
      if (matched == 0) return 0.0;
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else if (matched == 0) {
      p = 1.0 / static_cast<double>(total + 1);
    } else {
      p = static_cast<double>(matched) / static_cast<double>(total);
    }
    product *= p;
  }
  double bp = c.size() > r.size()
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(r.size()) / static_cast<double>(c.size()));
  return bp * std::pow(product, 0.25) * 100.0;
}

/// Multiset unigram F1 via sorted intersection.
inline double oracle_token_f1(std::vector<std::string> a, std::vector<std::string> b) {
  if (a.empty() || b.empty()) return 0.0;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::string> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  if (common.empty()) return 0.0;
  return 2.0 * static_cast<double>(common.size()) / static_cast<double>(a.size() + b.size());
}

/// Positions (in original order) that survive top-k selection over one
/// aspect's scores, ties broken toward the earlier position.
inline std::vector<std::size_t> oracle_top_k_positions(const std::vector<double>& scores, int k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  if (idx.size() > static_cast<std::size_t>(k)) idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// ---------------------------------------------------------------------------
// Random fixture generators.
// ---------------------------------------------------------------------------

inline std::string random_word(std::mt19937_64& gen, int min_len = 1, int max_len = 8) {
  static constexpr char kAlpha[] =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, sizeof(kAlpha) - 2);
  std::string out;
  int n = len(gen);
  for (int i = 0; i < n; ++i) out.push_back(kAlpha[pick(gen)]);
  return out;
}

/// A cell that may contain characters needing escapes ('|', '\\', '\n')
/// anywhere, but never leading or trailing spaces (those do not survive
/// the separator-stripping on parse) and only occasionally nothing at all.
inline std::string random_cell(std::mt19937_64& gen, bool allow_empty = true) {
  std::uniform_int_distribution<int> coin(0, 9);
  if (allow_empty && coin(gen) == 0) return "";
  std::string cell = random_word(gen, 1, 6);
  int extras = coin(gen) % 3;
  for (int i = 0; i < extras; ++i) {
    static constexpr char kSpecials[] = {'|', '\\', '\n', ' ', '.'};
    std::uniform_int_distribution<int> which(0, 4);
    cell.push_back(kSpecials[which(gen)]);
    cell += random_word(gen, 1, 4);
  }
  return cell;
}

/// A structurally valid table of up to 10 columns x 10 rows, sometimes
/// titled, with escape-needing characters sprinkled through the cells.
inline qtp::Table random_table(std::mt19937_64& gen) {
  std::uniform_int_distribution<std::size_t> dim(1, 10);
  std::uniform_int_distribution<int> coin(0, 1);
  qtp::Table t;
  if (coin(gen)) t.title = random_cell(gen, /*allow_empty=*/false);
  std::size_t cols = dim(gen);
  std::size_t rows = dim(gen);
  for (std::size_t c = 0; c < cols; ++c)
    t.column_headers.push_back(random_cell(gen, /*allow_empty=*/false));
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::string> row;
    for (std::size_t c = 0; c < cols; ++c) row.push_back(random_cell(gen));
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// A column name safe for the evidence mini-language: letters only, never
/// the ALL sentinel.
inline std::string random_column_name(std::mt19937_64& gen) {
  static constexpr char kLetters[] = "abcdefghijklmnopqrstuvwxyz";
  std::uniform_int_distribution<int> len(2, 8);
  std::uniform_int_distribution<std::size_t> pick(0, sizeof(kLetters) - 2);
  std::string out;
  do {
    out.clear();
    int n = len(gen);
    for (int i = 0; i < n; ++i) out.push_back(kLetters[pick(gen)]);
  } while (qtp::iequals(out, "all"));
  return out;
}

/// A canonical cell evidence: ALL or 1-4 named columns, and either no row
/// clause, ALL rows, or 1-5 distinct indices.
inline qtp::CellEvidence random_evidence(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> d10(0, 9);
  qtp::CellEvidence e;
  if (d10(gen) < 2) {
    e.all_columns = true;
  } else {
    std::uniform_int_distribution<int> n(1, 4);
    int count = n(gen);
    while (static_cast<int>(e.columns.size()) < count) {
      std::string name = random_column_name(gen);
      if (std::find(e.columns.begin(), e.columns.end(), name) == e.columns.end())
        e.columns.push_back(std::move(name));
    }
  }
  int row_mode = d10(gen);
  if (row_mode < 3) {
    e.has_row_clause = false;
  } else if (row_mode < 5) {
    e.has_row_clause = true;
    e.all_rows = true;
  } else {
    e.has_row_clause = true;
    std::uniform_int_distribution<int> n(1, 5);
    std::uniform_int_distribution<int> idx(1, 20);
    int count = n(gen);
    while (static_cast<int>(e.rows.size()) < count) {
      int row = idx(gen);
      if (std::find(e.rows.begin(), e.rows.end(), row) == e.rows.end()) e.rows.push_back(row);
    }
  }
  return e;
}

}  // namespace testsupport
