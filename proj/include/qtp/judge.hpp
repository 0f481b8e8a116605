#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qtp/flatten.hpp"
#include "qtp/gateway.hpp"
#include "qtp/metrics.hpp"
#include "qtp/prompts.hpp"

namespace qtp {

namespace detail {

inline std::optional<double> first_number(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(text[i]))) {
      std::size_t end = i;
      while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
      if (end + 1 < text.size() && text[end] == '.' &&
          std::isdigit(static_cast<unsigned char>(text[end + 1]))) {
        ++end;
        while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
      }
      return std::stod(std::string(text.substr(i, end - i)));
    }
  }
  return std::nullopt;
}

inline constexpr std::string_view kNumericNudge =
    "\n\nReply with only the numeric score, nothing else.";

}  // namespace detail

/// Criteria-based 1–5 judgment of a summary's analytical depth.  An
/// out-of-range or non-numeric reply is retried once with a terser
/// instruction; a second failure returns nullopt so the caller can exclude
/// and count it instead of aborting a whole evaluation.
inline std::optional<double> geval_score(Gateway& gateway, const PromptLibrary& prompts,
                                         const Table& table, const std::string& summary,
                                         const std::string& template_name = "geval_insightfulness") {
  const PromptTemplate& tmpl = prompts.get(template_name);
  require_placeholders(tmpl, {"table", "summary"});
  std::string prompt = render_prompt(
      tmpl, {{"table", serialize_table(table).text}, {"summary", summary}});

  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply = gateway.chat_prompt(Role::Judge, prompt).completion;
    auto value = detail::first_number(reply);
    if (value && *value >= 1.0 && *value <= 5.0) return value;
    prompt += detail::kNumericNudge;
  }
  return std::nullopt;
}

/// Fraction of summary sentences the judge marks as supported by the
/// table.  The judge sees the whole summary and answers sentence by
/// sentence; the local sentence split fixes how many T/F verdicts the
/// reply must contain, and any other count is a MetricParseError.
inline double sentence_faithfulness(Gateway& gateway, const PromptLibrary& prompts,
                                    const Table& table, const std::string& summary,
                                    const std::string& template_name = "sentence_faithfulness") {
  auto sentences = split_sentences(summary);
  if (sentences.empty()) throw EmptyTextError("summary");

  const PromptTemplate& tmpl = prompts.get(template_name);
  require_placeholders(tmpl, {"table", "summary"});
  std::string prompt = render_prompt(
      tmpl, {{"table", serialize_table(table).text}, {"summary", summary}});

  std::string reply = gateway.chat_prompt(Role::Judge, prompt).completion;

  std::vector<bool> verdicts;
  for (std::string_view line : split(reply, '\n')) {
    std::string_view t = trim(line);
    if (t.empty()) continue;
    std::size_t mark = to_lower(t).find("verification");
    std::string_view after;
    if (mark != std::string_view::npos) {
      std::size_t colon = t.find(':', mark);
      if (colon == std::string_view::npos) continue;
      after = trim(t.substr(colon + 1));
    } else {
      // Tolerate bare verdicts, possibly enumerated: "T", "2. F", "True".
      std::string_view stripped = t;
      std::size_t d = 0;
      while (d < stripped.size() && std::isdigit(static_cast<unsigned char>(stripped[d]))) ++d;
      if (d > 0 && d < stripped.size() && (stripped[d] == '.' || stripped[d] == ')'))
        stripped = ltrim(stripped.substr(d + 1));
      after = stripped;
    }
    if (istarts_with(after, "true") || (after.size() >= 1 && (after[0] == 'T' || after[0] == 't')))
      verdicts.push_back(true);
    else if (istarts_with(after, "false") || (after.size() >= 1 && (after[0] == 'F' || after[0] == 'f')))
      verdicts.push_back(false);
  }

  if (verdicts.size() != sentences.size())
    throw MetricParseError("expected " + std::to_string(sentences.size()) +
                           " sentence verdicts, parsed " + std::to_string(verdicts.size()));

  std::size_t supported = 0;
  for (bool v : verdicts) supported += v ? 1 : 0;
  return static_cast<double>(supported) / static_cast<double>(verdicts.size());
}

enum class PairwiseOutcome { A, B, Tie };

inline std::string to_string(PairwiseOutcome o) {
  switch (o) {
    case PairwiseOutcome::A: return "A";
    case PairwiseOutcome::B: return "B";
    default: return "Tie";
  }
}

namespace detail {

/// Finds which of the two listed summaries the judge picked: 1 for the
/// first-listed ("Summary A"), 2 for the second ("Summary B").  Looks
/// after the last "Better Summary Index" anchor when one is present and
/// accepts a standalone A/B letter or 1/2 digit, so "Better Summary
/// Index: A", "[B]" and a bare "A" all parse.
inline std::optional<int> parse_choice_index(std::string_view reply) {
  std::string lower = to_lower(reply);
  std::size_t at = lower.rfind("better summary index");
  std::size_t begin = at == std::string::npos ? 0 : at + std::string_view("better summary index").size();
  auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  for (std::size_t i = begin; i < lower.size(); ++i) {
    char c = lower[i];
    if (c != 'a' && c != 'b' && c != '1' && c != '2') continue;
    if (i > 0 && alnum(lower[i - 1])) continue;
    if (i + 1 < lower.size() && alnum(lower[i + 1])) continue;
    return (c == 'a' || c == '1') ? 1 : 2;
  }
  return std::nullopt;
}

}  // namespace detail

/// Position-debiased pairwise judgment: the pair is judged twice with the
/// order swapped, and only a winner named in both orders counts; a judge
/// that keeps picking the same *position* yields a tie.
inline PairwiseOutcome pairwise_compare(Gateway& gateway, const PromptLibrary& prompts,
                                        const Table& table, const std::string& summary_a,
                                        const std::string& summary_b,
                                        const std::string& template_name) {
  const PromptTemplate& tmpl = prompts.get(template_name);
  require_placeholders(tmpl, {"table", "summary_a", "summary_b"});
  std::string flat = serialize_table(table).text;

  auto ask = [&](const std::string& first, const std::string& second) -> int {
    std::string prompt = render_prompt(
        tmpl, {{"table", flat}, {"summary_a", first}, {"summary_b", second}});
    std::string reply = gateway.chat_prompt(Role::Judge, prompt).completion;
    auto choice = detail::parse_choice_index(reply);
    if (!choice)
      throw MetricParseError("no summary index in judge reply '" + reply.substr(0, 48) + "'");
    return *choice;
  };

  PairwiseOutcome forward = ask(summary_a, summary_b) == 1 ? PairwiseOutcome::A : PairwiseOutcome::B;
  PairwiseOutcome backward = ask(summary_b, summary_a) == 1 ? PairwiseOutcome::B : PairwiseOutcome::A;
  return forward == backward ? forward : PairwiseOutcome::Tie;
}

}  // namespace qtp
