#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qtp/errors.hpp"

namespace qtp {

/// Identifier for the tokenizer below; recorded in evaluation reports so a
/// score is never compared across tokenization rules.
inline constexpr std::string_view kTokenizerVersion = "lower-alnum-v1";

/// Lowercases and splits on runs of non-alphanumeric bytes.  Deliberately
/// simple and fixed: scores are only comparable under an identical rule.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace detail {

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens,
                                                            std::size_t n) {
  std::map<std::vector<std::string>, int> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

}  // namespace detail

/// Longest-common-subsequence F1 between candidate and reference.
/// F1 = 2·LCS / (|cand| + |ref|), algebraically equal to the harmonic mean
/// of LCS precision and recall but computed in one exact division.
inline double rouge_l_f1(std::string_view candidate, std::string_view reference) {
  auto c = tokenize(candidate);
  auto r = tokenize(reference);
  if (c.empty()) throw EmptyTextError("candidate");
  if (r.empty()) throw EmptyTextError("reference");
  std::size_t lcs = detail::lcs_length(c, r);
  if (lcs == 0) return 0.0;
  return 2.0 * static_cast<double>(lcs) / static_cast<double>(c.size() + r.size());
}

/// Corpus-of-one BLEU on the 0–100 scale.  Modified n-gram precision for
/// n = 1..4 with add-one smoothing on zero matches for n >= 2 (an order the
/// candidate is too short to produce contributes a factor of 1), geometric
/// mean, and the standard brevity penalty.  A zero unigram precision short
/// circuits to 0.
inline double bleu(std::string_view candidate, std::string_view reference) {
  auto c = tokenize(candidate);
  auto r = tokenize(reference);
  if (c.empty()) throw EmptyTextError("candidate");
  if (r.empty()) throw EmptyTextError("reference");

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto cand_counts = detail::ngram_counts(c, n);
    auto ref_counts = detail::ngram_counts(r, n);
    long total = c.size() >= n ? static_cast<long>(c.size() - n + 1) : 0;
    long matched = 0;
    for (const auto& [gram, count] : cand_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
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
    log_sum += 0.25 * std::log(p);
  }

  double bp = c.size() > r.size()
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(r.size()) / static_cast<double>(c.size()));
  return bp * std::exp(log_sum) * 100.0;
}

/// Unigram METEOR: exact-match alignment (each candidate token pairs with
/// the first unmatched identical reference token, left to right), harmonic
/// mean weighted 9:1 toward precision's complement, and a fragmentation
/// penalty of 0.5·(chunks/matches)³.
inline double meteor_basic(std::string_view candidate, std::string_view reference) {
  auto c = tokenize(candidate);
  auto r = tokenize(reference);
  if (c.empty()) throw EmptyTextError("candidate");
  if (r.empty()) throw EmptyTextError("reference");

  std::vector<bool> ref_used(r.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (cand pos, ref pos)
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (!ref_used[j] && c[i] == r[j]) {
        ref_used[j] = true;
        matches.emplace_back(i, j);
        break;
      }
    }
  }
  if (matches.empty()) return 0.0;

  std::size_t chunks = 1;
  for (std::size_t k = 1; k < matches.size(); ++k) {
    if (matches[k].first != matches[k - 1].first + 1 ||
        matches[k].second != matches[k - 1].second + 1)
      ++chunks;
  }

  double m = static_cast<double>(matches.size());
  double precision = m / static_cast<double>(c.size());
  double recall = m / static_cast<double>(r.size());
  double fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
  double frag = static_cast<double>(chunks) / m;
  double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

/// Multiset unigram-overlap F1.  Unlike the reporting metrics this returns
/// 0 instead of throwing on empty text: it doubles as the offline stand-in
/// for embedding similarity during scoring, where robustness beats
/// strictness.
inline double token_f1(std::string_view a, std::string_view b) {
  auto ta = tokenize(a);
  auto tb = tokenize(b);
  if (ta.empty() || tb.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& tok : ta) ++counts[tok];
  long overlap = 0;
  for (const auto& tok : tb) {
    auto it = counts.find(tok);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  return 2.0 * static_cast<double>(overlap) / static_cast<double>(ta.size() + tb.size());
}

/// Splits text into sentences at runs of '.', '?', '!' — except a '.'
/// flanked by digits, which stays inside a number like 1.40.  Delimiters
/// stay attached; surrounding whitespace is trimmed; empty pieces vanish.
inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::string current;
  auto flush = [&] {
    std::size_t b = current.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
      current.clear();
      return;
    }
    std::size_t e = current.find_last_not_of(" \t\r\n");
    sentences.push_back(current.substr(b, e - b + 1));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char ch = text[i];
    current.push_back(ch);
    bool boundary = ch == '.' || ch == '?' || ch == '!';
    if (boundary && ch == '.' && i > 0 && i + 1 < text.size() &&
        std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(text[i + 1])))
      boundary = false;
    if (boundary) {
      while (i + 1 < text.size() &&
             (text[i + 1] == '.' || text[i + 1] == '?' || text[i + 1] == '!')) {
        current.push_back(text[i + 1]);
        ++i;
      }
      flush();
    }
  }
  flush();
  return sentences;
}

}  // namespace qtp
