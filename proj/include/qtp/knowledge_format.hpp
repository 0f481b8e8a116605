#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qtp/knowledge.hpp"
#include "qtp/logging.hpp"
#include "qtp/strings.hpp"

namespace qtp {

// Text formats the models read and write.  The same grammar backs teacher
// mining, reasoner training data, and reasoner inference, so it lives in
// one place: render_* produces the canonical form, parse_* accepts the
// canonical form plus the enumeration noise models actually emit.

inline constexpr std::string_view kAspectMarker = "(Coarse-level Aspect):";
inline constexpr std::string_view kQuestionsMarker = "(Fine-level Questions):";

namespace detail {

/// Strips one leading enumerator like "Q-1:", "Q2.", "(3)", "1)", or a
/// "- "/"* " bullet.  Returns the line unchanged when no enumerator is
/// recognized; a line starting with a bare number not followed by
/// punctuation (say "1990 was busy") is left alone.
inline std::string_view strip_enumerator(std::string_view line) {
  std::string_view t = trim(line);
  while (t.size() >= 2 && (t[0] == '-' || t[0] == '*') && t[1] == ' ')
    t = ltrim(t.substr(1));

  std::string_view s = t;
  std::size_t i = 0;
  bool paren = i < s.size() && (s[i] == '(' || s[i] == '[');
  if (paren) ++i;
  bool saw_q = false;
  if (i < s.size() && (s[i] == 'Q' || s[i] == 'q')) {
    saw_q = true;
    ++i;
    if (i < s.size() && (s[i] == '-' || s[i] == '.')) ++i;
  }
  std::size_t digits_start = i;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  bool saw_digits = i > digits_start;
  if (saw_digits && i + 1 < s.size() && s[i] == '-' &&
      std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
    i += 2;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  }
  if (!saw_q && !saw_digits) return t;
  if (paren) {
    if (i < s.size() && (s[i] == ')' || s[i] == ']'))
      ++i;
    else
      return t;
  }
  if (i < s.size() && (s[i] == ':' || s[i] == '.' || s[i] == ')')) {
    ++i;
  } else if (!(paren && saw_digits)) {
    return t;
  }
  if (i < s.size() && s[i] != ' ' && !paren && !saw_q) return t;
  return ltrim(s.substr(i));
}

/// Matches marker lines like "(Coarse-level Aspect): Finances"; returns
/// the text after the colon when the line is that marker.
inline std::optional<std::string_view> match_marker(std::string_view line, std::string_view word) {
  std::string_view t = trim(line);
  if (!t.empty() && t.front() == '(') t.remove_prefix(1);
  t = ltrim(t);
  if (!istarts_with(t, word)) return std::nullopt;
  t.remove_prefix(word.size());
  t = ltrim(t);
  if (!t.empty() && t.front() == 's') t.remove_prefix(1);  // plural
  t = ltrim(t);
  if (!t.empty() && t.front() == ')') t.remove_prefix(1);
  t = ltrim(t);
  if (t.empty() || t.front() != ':') return std::nullopt;
  return trim(t.substr(1));
}

}  // namespace detail

struct AspectQuestions {
  Aspect aspect;
  std::vector<Question> questions;
};

/// Renders aspects and their questions the way the aspect-mining prompt
/// teaches the model to answer — also the target text for question
/// generation training.
inline std::string render_aq_block(const std::vector<AspectQuestions>& groups) {
  std::string out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (g) out += "\n\n";
    out += kAspectMarker;
    out += " ";
    out += groups[g].aspect.label;
    out += "\n";
    out += kQuestionsMarker;
    for (const auto& q : groups[g].questions) {
      out += "\nQ-" + std::to_string(q.question_index) + ": " + q.text;
    }
  }
  return out;
}

/// Parses an aspect/question reply.  Tolerates enumeration prefixes,
/// blank lines, and prose before the first marker.  Aspects that end up
/// with no questions are dropped with a warning; when max_per_aspect > 0,
/// surplus questions beyond it are ignored with a warning.  Returns an
/// empty vector when the reply contains no aspect marker at all.
inline std::vector<AspectQuestions> parse_aq_block(std::string_view reply,
                                                   int max_per_aspect = 0) {
  std::vector<AspectQuestions> groups;
  bool collecting_questions = false;

  for (std::string_view raw_line : split(reply, '\n')) {
    if (trim(raw_line).empty()) continue;

    if (auto label = detail::match_marker(raw_line, "coarse-level aspect")) {
      groups.push_back(AspectQuestions{
          Aspect{static_cast<int>(groups.size()) + 1, std::string(*label)}, {}});
      collecting_questions = false;
      continue;
    }
    if (auto rest = detail::match_marker(raw_line, "fine-level question")) {
      collecting_questions = !groups.empty();
      // Some replies start the first question on the marker line itself.
      if (collecting_questions && !rest->empty()) {
        std::string_view q = detail::strip_enumerator(*rest);
        if (!q.empty())
          groups.back().questions.push_back(
              Question{groups.back().aspect.index, 1, std::string(q)});
      }
      continue;
    }
    if (!collecting_questions) continue;

    std::string_view q = detail::strip_enumerator(raw_line);
    if (q.empty()) continue;
    auto& group = groups.back();
    if (max_per_aspect > 0 && group.questions.size() >= static_cast<std::size_t>(max_per_aspect)) {
      warn("aspect '" + group.aspect.label + "' has more than " +
           std::to_string(max_per_aspect) + " questions; ignoring the rest");
      continue;
    }
    group.questions.push_back(Question{group.aspect.index,
                                       static_cast<int>(group.questions.size()) + 1,
                                       std::string(q)});
  }

  std::vector<AspectQuestions> kept;
  for (auto& g : groups) {
    if (g.questions.empty()) {
      warn("aspect '" + g.aspect.label + "' has no questions; dropping it");
      continue;
    }
    g.aspect.index = static_cast<int>(kept.size()) + 1;
    for (auto& q : g.questions) q.aspect_index = g.aspect.index;
    kept.push_back(std::move(g));
  }
  return kept;
}

/// Flat numbered question list, the {questions} slot of the
/// evidence/insight mining prompt.  Numbering is global across aspects;
/// reply groups pair with these questions by position.
inline std::string render_questions_list(const std::vector<Question>& questions) {
  std::string out;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (i) out += "\n";
    out += "Q-" + std::to_string(i + 1) + ": " + questions[i].text;
  }
  return out;
}

/// One (question, evidence, insight) group parsed from a mining or
/// reasoning reply.  Fields stay unset when their marker never appeared.
struct EiGroup {
  std::optional<std::string> question;
  std::optional<std::string> evidence_raw;
  std::optional<std::string> insight;

  bool complete() const { return evidence_raw && insight && !evidence_raw->empty() && !insight->empty(); }
};

namespace detail {

enum class EiMarker { None, Question, Evidence, Insight };

inline std::pair<EiMarker, std::string_view> classify_ei_line(std::string_view line) {
  std::string_view t = trim(line);
  std::string_view s = t;
  if (!s.empty() && (s.front() == '(' || s.front() == '[')) s.remove_prefix(1);
  std::size_t w = 0;
  while (w < s.size() && std::isalpha(static_cast<unsigned char>(s[w]))) ++w;
  if (w == 0) return {EiMarker::None, t};
  std::string word = to_lower(s.substr(0, w));

  EiMarker kind = EiMarker::None;
  if (word == "q" || word == "question")
    kind = EiMarker::Question;
  else if (word == "e" || word == "evidence")
    kind = EiMarker::Evidence;
  else if (word == "i" || word == "insight" || word == "a" || word == "answer")
    kind = EiMarker::Insight;
  if (kind == EiMarker::None) return {EiMarker::None, t};

  // A short gap of numbering junk may sit between the word and the colon:
  // "(Q-1):", "Evidence 2:".  A long gap means this is prose, not a marker.
  std::size_t colon = s.find(':', w);
  if (colon == std::string_view::npos || colon - w > 12) return {EiMarker::None, t};
  for (std::size_t i = w; i < colon; ++i) {
    if (std::isalpha(static_cast<unsigned char>(s[i]))) return {EiMarker::None, t};
  }
  return {kind, trim(s.substr(colon + 1))};
}

}  // namespace detail

/// Splits an evidence/insight reply into marker-delimited groups:
///
///   (Q-1): which episode drew the most viewers?
///   (E-1): The relevant ... col(Title, U.S.viewers), row(13).
///   (I-1): Episode 13 drew the most viewers.
///
/// Unmarked lines extend a started insight; anything else between groups
/// is ignored.
inline std::vector<EiGroup> parse_ei_reply(std::string_view reply) {
  std::vector<EiGroup> groups;
  for (std::string_view line : split(reply, '\n')) {
    if (trim(line).empty()) continue;
    auto [kind, rest] = detail::classify_ei_line(line);
    switch (kind) {
      case detail::EiMarker::Question:
        groups.emplace_back();
        groups.back().question = std::string(rest);
        break;
      case detail::EiMarker::Evidence:
        if (groups.empty() || groups.back().evidence_raw) groups.emplace_back();
        groups.back().evidence_raw = std::string(rest);
        break;
      case detail::EiMarker::Insight:
        if (groups.empty() || groups.back().insight) groups.emplace_back();
        groups.back().insight = std::string(rest);
        break;
      case detail::EiMarker::None:
        if (!groups.empty() && groups.back().insight)
          *groups.back().insight += " " + std::string(rest);
        break;
    }
  }
  return groups;
}

/// The knowledge block handed to the summarizer: surviving insights
/// grouped under their aspect labels.  An empty set renders as "".
inline std::string render_knowledge_block(const KnowledgeSet& ks) {
  std::string out;
  for (const auto& aspect : ks.aspects) {
    std::string section;
    for (const auto& tr : ks.triples) {
      if (tr.question.aspect_index != aspect.index) continue;
      section += "\n- " + tr.insight.text;
    }
    if (section.empty()) continue;
    if (!out.empty()) out += "\n\n";
    out += "Aspect: " + aspect.label + section;
  }
  return out;
}

}  // namespace qtp
