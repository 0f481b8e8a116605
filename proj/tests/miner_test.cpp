/// @file
/// @brief Prompt templates and the two-pass teacher miner: aspect/question
/// mining, evidence/insight mining with its count-mismatch retry, and the
/// raw-only evidence fallback.

#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "qtp/flatten.hpp"
#include "qtp/miner.hpp"
#include "qtp/prompts.hpp"
#include "support/rig.hpp"

namespace {

using namespace qtp;
using testsupport::repo_prompts;
using testsupport::Rig;

TEST(PromptLibrary, ShippedTemplatesDeclareTheirSlots) {
  PromptLibrary prompts = repo_prompts();
  struct Expectation {
    const char* name;
    std::vector<const char*> slots;
  };
  const Expectation expected[] = {
      {"mine_aq", {"table", "summary"}},
      {"mine_ei", {"table", "summary", "questions"}},
      {"reasoner_qg", {"table"}},
      {"reasoner_ig", {"table", "question"}},
      {"summarize", {"table", "knowledge"}},
      {"critic", {"table", "claim"}},
      {"aggregate", {"table", "summaries"}},
      {"geval_insightfulness", {"table", "summary"}},
      {"sentence_faithfulness", {"table", "summary"}},
      {"pairwise_comprehensive", {"table", "summary_a", "summary_b"}},
      {"pairwise_informative", {"table", "summary_a", "summary_b"}},
      {"pairwise_natural", {"table", "summary_a", "summary_b"}},
  };
  for (const auto& e : expected) {
    ASSERT_TRUE(prompts.contains(e.name)) << e.name;
    for (const char* slot : e.slots)
      EXPECT_TRUE(prompts.get(e.name).has_placeholder(slot)) << e.name << " {" << slot << "}";
  }
  // The instruction-tuning emitters slice these bodies at the table slot.
  EXPECT_NE(prompts.get("reasoner_qg").body.find("\n\nTable:"), std::string::npos);
  EXPECT_NE(prompts.get("reasoner_ig").body.find("\n\nTable:"), std::string::npos);
}

TEST(PromptLibrary, RenderFillsEveryOccurrence) {
  PromptTemplate tmpl{"t", "{x} and {x} but not {y}"};
  EXPECT_EQ(render_prompt(tmpl, {{"x", "A"}}), "A and A but not {y}");
  EXPECT_TRUE(tmpl.has_placeholder("y"));
  EXPECT_FALSE(tmpl.has_placeholder("z"));
}

TEST(PromptLibrary, MissingSlotFailsLoudly) {
  PromptTemplate tmpl{"summarize", "no slots here"};
  try {
    require_placeholders(tmpl, {"table", "knowledge"});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("summarize"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("{table}"), std::string::npos);
  }
}

TEST(PromptLibrary, MissingDirectoryAndUnknownNameThrow) {
  EXPECT_THROW(PromptLibrary("/nonexistent/prompt/dir"), ConfigError);
  EXPECT_THROW(repo_prompts().get("no_such_template"), ConfigError);
}

// ---------------------------------------------------------------------------
// Aspect/question mining.

class MinerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    rig_.add_role(Role::Teacher);
    prompts_ = repo_prompts();
    table_ = testsupport::season_table();
    summary_ = "Celtic drew 41658, the peak of the season.";
    flat_ = serialize_table(table_).text;
  }

  std::string aq_prompt() const {
    return render_prompt(prompts_.get("mine_aq"), {{"table", flat_}, {"summary", summary_}});
  }

  std::string ei_prompt(const std::vector<Question>& questions) const {
    return render_prompt(prompts_.get("mine_ei"),
                         {{"table", flat_},
                          {"summary", summary_},
                          {"questions", render_questions_list(questions)}});
  }

  Rig rig_;
  PromptLibrary prompts_;
  Table table_;
  std::string summary_;
  std::string flat_;
};

TEST_F(MinerTest, MinesAspectsAndQuestions) {
  rig_.script(Role::Teacher, aq_prompt(),
              "(Coarse-level Aspect): Attendance Trends\n"
              "(Fine-level Questions):\n"
              "Q-1: How did crowds evolve?\n"
              "Q-2: Which match peaked?\n"
              "\n"
              "(Coarse-level Aspect): Results\n"
              "(Fine-level Questions):\n"
              "Q-1: How did the home form look?\n");
  auto groups = mine_aspects_questions(rig_.gateway(), prompts_, table_, summary_);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].aspect.label, "Attendance Trends");
  EXPECT_EQ(groups[0].questions.size(), 2u);
  EXPECT_EQ(groups[1].questions[0].aspect_index, 2);
}

TEST_F(MinerTest, QuestionCapIsEnforcedDuringParse) {
  std::string reply = "(Coarse-level Aspect): A\n(Fine-level Questions):\n";
  for (int i = 1; i <= 7; ++i) reply += "Q-" + std::to_string(i) + ": question " + std::to_string(i) + "\n";
  rig_.script(Role::Teacher, aq_prompt(), reply);

  CapturedWarnings warnings;
  MinerConfig cfg;
  cfg.questions_per_aspect = 5;
  auto groups = mine_aspects_questions(rig_.gateway(), prompts_, table_, summary_, cfg);
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].questions.size(), 5u);
  EXPECT_FALSE(warnings.messages().empty());
}

TEST_F(MinerTest, EmptySummaryIsRejectedBeforeAnyCall) {
  EXPECT_THROW(mine_aspects_questions(rig_.gateway(), prompts_, table_, "  "),
               std::invalid_argument);
  EXPECT_EQ(rig_.backend(Role::Teacher).chat_calls(), 0);
}

TEST_F(MinerTest, BlankReplyIsAnAQParseError) {
  rig_.script(Role::Teacher, aq_prompt(), "   \n  ");
  EXPECT_THROW(mine_aspects_questions(rig_.gateway(), prompts_, table_, summary_), AQParseError);
}

TEST_F(MinerTest, ProseWithoutMarkersIsEmptyAspects) {
  rig_.script(Role::Teacher, aq_prompt(), "The table is about football matches.");
  EXPECT_THROW(mine_aspects_questions(rig_.gateway(), prompts_, table_, summary_),
               EmptyAspectsError);
}

// ---------------------------------------------------------------------------
// Evidence/insight mining.

TEST_F(MinerTest, MinesEvidenceAndInsightsPairedByPosition) {
  std::vector<Question> questions = {{1, 1, "Which match drew the most fans?"},
                                     {1, 2, "How did away form look?"}};
  rig_.script(Role::Teacher, ei_prompt(questions),
              "(Q-1): the teacher's own paraphrase\n"
              "(E-1): The relevant columns and rows for the Question is col(Opponents, Attendance), row(8).\n"
              "(I-1): Celtic drew 41658, the largest crowd.\n"
              "(Q-2): another paraphrase\n"
              "(E-2): col(Result F - A), row(all).\n"
              "(I-2): United won most away fixtures.\n");
  auto triples = mine_evidence_insights(rig_.gateway(), prompts_, table_, summary_, questions);
  ASSERT_EQ(triples.size(), 2u);
  // The stored question is the input, never the teacher's echo.
  EXPECT_EQ(triples[0].question.text, "Which match drew the most fans?");
  ASSERT_TRUE(triples[0].evidence.has_value());
  EXPECT_EQ(triples[0].evidence->columns, (std::vector<std::string>{"Opponents", "Attendance"}));
  EXPECT_EQ(triples[0].evidence->rows, (std::vector<int>{8}));
  EXPECT_TRUE(triples[1].evidence->all_rows);
  EXPECT_EQ(triples[1].insight.text, "United won most away fixtures.");
  EXPECT_EQ(triples[0].insight.factuality, Factuality::Unverified);
}

TEST_F(MinerTest, CountMismatchTriggersOneRetryWithReminder) {
  std::vector<Question> questions = {{1, 1, "q one?"}, {1, 2, "q two?"}};
  std::string base = ei_prompt(questions);
  rig_.script(Role::Teacher, base,
              "(E-1): col(Date).\n(I-1): only one group came back.\n");
  std::string reminder = base +
                         "\n\nAnswer with exactly 2 (Question, Evidence, Insight) groups, "
                         "one per question, in order.";
  rig_.script(Role::Teacher, reminder,
              "(E-1): col(Date).\n(I-1): first.\n(E-2): col(Opponents).\n(I-2): second.\n");

  auto triples = mine_evidence_insights(rig_.gateway(), prompts_, table_, summary_, questions);
  ASSERT_EQ(triples.size(), 2u);
  EXPECT_EQ(triples[1].insight.text, "second.");
  EXPECT_EQ(rig_.backend(Role::Teacher).chat_calls(), 2);
}

TEST_F(MinerTest, PersistentCountMismatchThrows) {
  std::vector<Question> questions = {{1, 1, "q one?"}, {1, 2, "q two?"}};
  std::string base = ei_prompt(questions);
  std::string one_group = "(E-1): col(Date).\n(I-1): still just one.\n";
  rig_.script(Role::Teacher, base, one_group);
  rig_.script(Role::Teacher,
              base + "\n\nAnswer with exactly 2 (Question, Evidence, Insight) groups, "
                     "one per question, in order.",
              one_group);
  try {
    mine_evidence_insights(rig_.gateway(), prompts_, table_, summary_, questions);
    FAIL() << "expected QuestionCountMismatchError";
  } catch (const QuestionCountMismatchError& e) {
    EXPECT_EQ(e.expected, 2u);
    EXPECT_EQ(e.parsed, 1u);
  }
}

TEST_F(MinerTest, UnparseableEvidenceBecomesRawOnly) {
  std::vector<Question> questions = {{1, 1, "q?"}};
  rig_.script(Role::Teacher, ei_prompt(questions),
              "(E-1): look at the bottom row of the table\n"
              "(I-1): the last match was at home.\n");
  CapturedWarnings warnings;
  auto triples = mine_evidence_insights(rig_.gateway(), prompts_, table_, summary_, questions);
  ASSERT_EQ(triples.size(), 1u);
  EXPECT_FALSE(triples[0].evidence.has_value());
  EXPECT_EQ(triples[0].evidence_raw, "look at the bottom row of the table");
  EXPECT_EQ(triples[0].insight.text, "the last match was at home.");
  ASSERT_EQ(warnings.messages().size(), 1u);
  EXPECT_NE(warnings.messages()[0].find("kept raw only"), std::string::npos);
}

TEST_F(MinerTest, IncompleteGroupsAreDroppedAfterTheCountCheck) {
  std::vector<Question> questions = {{1, 1, "q one?"}, {1, 2, "q two?"}};
  rig_.script(Role::Teacher, ei_prompt(questions),
              "(E-1): col(Date).\n(I-1): complete group.\n"
              "(E-2): col(Opponents).\n");  // no insight -> incomplete
  CapturedWarnings warnings;
  auto triples = mine_evidence_insights(rig_.gateway(), prompts_, table_, summary_, questions);
  ASSERT_EQ(triples.size(), 1u);
  EXPECT_EQ(triples[0].question.question_index, 1);
  ASSERT_EQ(warnings.messages().size(), 1u);
  EXPECT_NE(warnings.messages()[0].find("incomplete"), std::string::npos);
}

TEST_F(MinerTest, NoQuestionsShortCircuitsWithoutACall) {
  EXPECT_TRUE(mine_evidence_insights(rig_.gateway(), prompts_, table_, summary_, {}).empty());
  EXPECT_EQ(rig_.backend(Role::Teacher).chat_calls(), 0);
}

TEST_F(MinerTest, MineRecordAssemblesAndStampsProvenance) {
  CorpusRecord rec;
  rec.table = table_;
  rec.summary = summary_;

  rig_.script(Role::Teacher, aq_prompt(),
              "(Coarse-level Aspect): Attendance\n(Fine-level Questions):\nQ-1: peak crowd?\n"
              "\n(Coarse-level Aspect): Form\n(Fine-level Questions):\nQ-1: away record?\n");
  std::vector<Question> expected_questions = {{1, 1, "peak crowd?"}, {2, 1, "away record?"}};
  rig_.script(Role::Teacher, ei_prompt(expected_questions),
              "(E-1): col(Attendance), row(8).\n(I-1): 41658 against Celtic.\n"
              "(E-2): col(Result F - A).\n(I-2): Strong away form.\n");

  AugmentedRecord record = mine_record(rig_.gateway(), prompts_, rec);
  EXPECT_EQ(record.table_id(), "season-1990-91");
  EXPECT_EQ(record.reference_summary, summary_);
  EXPECT_EQ(record.provenance, (std::vector<Stage>{Stage::Mined}));
  ASSERT_EQ(record.knowledge.aspects.size(), 2u);
  ASSERT_EQ(record.knowledge.triples.size(), 2u);
  EXPECT_EQ(record.knowledge.triples[1].question.aspect_index, 2);
}

}  // namespace
