/// @file
/// @brief Knowledge quality control: critic verification with its filter
/// report, leave-one-out importance scoring, per-aspect top-k pruning, and
/// the composed enhance step.

#include <gtest/gtest.h>

#include <optional>
#include <string>
#include <vector>

#include "qtp/flatten.hpp"
#include "qtp/quality.hpp"
#include "support/rig.hpp"

namespace {

using namespace qtp;
using testsupport::repo_prompts;
using testsupport::Rig;

class QualityTest : public ::testing::Test {
 protected:
  void SetUp() override {
    rig_.add_role(Role::Critic);
    rig_.add_role(Role::Summarizer);
    prompts_ = repo_prompts();
    table_ = testsupport::season_table();
    flat_ = serialize_table(table_).text;
  }

  AugmentedRecord mined_record(const std::vector<std::string>& aspect_one_insights,
                               const std::vector<std::string>& aspect_two_insights = {}) {
    AugmentedRecord rec;
    rec.table = table_;
    rec.reference_summary = "Celtic drew the peak crowd of 41658 in a 1 - 3 home loss.";
    rec.knowledge.aspects = {{1, "Attendance"}};
    if (!aspect_two_insights.empty()) rec.knowledge.aspects.push_back({2, "Results"});
    int qidx = 0;
    for (const auto& text : aspect_one_insights) {
      KnowledgeTriple tr;
      tr.question = {1, ++qidx, "question 1." + std::to_string(qidx)};
      tr.insight.text = text;
      rec.knowledge.triples.push_back(tr);
    }
    qidx = 0;
    for (const auto& text : aspect_two_insights) {
      KnowledgeTriple tr;
      tr.question = {2, ++qidx, "question 2." + std::to_string(qidx)};
      tr.insight.text = text;
      rec.knowledge.triples.push_back(tr);
    }
    rec.provenance = {Stage::Mined};
    return rec;
  }

  std::string critic_prompt_for(const std::string& claim) const {
    std::string p(kDefaultCriticPrompt);
    auto sub = [&p](const std::string& key, const std::string& value) {
      for (std::size_t at = p.find(key); at != std::string::npos; at = p.find(key, at)) {
        p.replace(at, key.size(), value);
        at += value.size();
      }
    };
    sub("{table}", flat_);
    sub("{claim}", claim);
    return p;
  }

  void script_critic(const std::string& claim, const std::string& verdict) {
    rig_.script(Role::Critic, critic_prompt_for(claim), verdict);
  }

  std::string ablation_prompt(const KnowledgeSet& knowledge, std::size_t skip) const {
    KnowledgeSet ablated;
    ablated.aspects = knowledge.aspects;
    for (std::size_t i = 0; i < knowledge.triples.size(); ++i)
      if (i != skip) ablated.triples.push_back(knowledge.triples[i]);
    return render_prompt(prompts_.get("summarize"),
                         {{"table", flat_}, {"knowledge", render_knowledge_block(ablated)}});
  }

  /// Scripts the same completion for every leave-one-out prompt of the
  /// given knowledge set.
  void script_constant_ablations(const KnowledgeSet& knowledge, const std::string& completion) {
    for (std::size_t i = 0; i < knowledge.triples.size(); ++i)
      rig_.script(Role::Summarizer, ablation_prompt(knowledge, i), completion);
  }

  Rig rig_;
  PromptLibrary prompts_;
  Table table_;
  std::string flat_;
};

TEST_F(QualityTest, VerifyRemovesRefutedInsightsAndTagsSurvivors) {
  AugmentedRecord rec = mined_record(
      {"Attendance peaked at 41658.", "Every match sold out."},
      {"United lost at home to Celtic."});
  script_critic("Attendance peaked at 41658.", "Entailed");
  script_critic("Every match sold out.", "Refuted");
  script_critic("United lost at home to Celtic.", "Entailed");

  VerifyResult result = verify_factuality(rig_.gateway(), rec);
  ASSERT_EQ(result.record.knowledge.triples.size(), 2u);
  EXPECT_EQ(result.record.knowledge.triples[0].insight.text, "Attendance peaked at 41658.");
  EXPECT_EQ(result.record.knowledge.triples[0].insight.factuality, Factuality::Entailed);
  EXPECT_EQ(result.record.knowledge.triples[1].question.aspect_index, 2);
  EXPECT_TRUE(result.record.has_stage(Stage::Verified));

  EXPECT_EQ(result.report.total, 3);
  EXPECT_EQ(result.report.refuted, 1);
  EXPECT_DOUBLE_EQ(result.report.refusal_rate(), 1.0 / 3.0);
  ASSERT_EQ(result.report.per_aspect.size(), 2u);
  EXPECT_EQ(result.report.per_aspect[0].total, 2);
  EXPECT_EQ(result.report.per_aspect[0].refuted, 1);
  EXPECT_EQ(result.report.per_aspect[1].refuted, 0);
}

TEST_F(QualityTest, VerifyDropsAspectsLeftWithoutInsights) {
  AugmentedRecord rec = mined_record({"claim one"}, {"claim two"});
  script_critic("claim one", "Refuted");
  script_critic("claim two", "Entailed");
  VerifyResult result = verify_factuality(rig_.gateway(), rec);
  ASSERT_EQ(result.record.knowledge.aspects.size(), 1u);
  EXPECT_EQ(result.record.knowledge.aspects[0].label, "Results");
}

TEST_F(QualityTest, VerifyRequiresAMinedRecord) {
  AugmentedRecord rec = mined_record({"x"});
  rec.provenance.clear();
  EXPECT_THROW(verify_factuality(rig_.gateway(), rec), std::invalid_argument);
}

TEST_F(QualityTest, FilterReportSerializesItsCounts) {
  FilterReport report;
  report.per_aspect = {{1, 10, 3}};
  report.total = 10;
  report.refuted = 3;
  json j = report;
  EXPECT_EQ(j["total"], 10);
  EXPECT_EQ(j["refuted"], 3);
  EXPECT_DOUBLE_EQ(j["refusal_rate"].get<double>(), 0.3);
  EXPECT_EQ(j["per_aspect"][0]["aspect"], 1);
}

TEST_F(QualityTest, ImportanceScoresAreNegatedTokenF1Similarities) {
  AugmentedRecord rec = mined_record(
      {"Celtic drew the peak crowd.", "Away form was strong.", "Crowds grew late in the year."});
  rec.mark_stage(Stage::Verified);

  std::vector<std::string> completions = {
      "Away form was strong while crowds grew late.",
      "Celtic drew the peak crowd of 41658.",
      "Celtic drew the peak crowd in a home loss.",
  };
  for (std::size_t i = 0; i < 3; ++i)
    rig_.script(Role::Summarizer, ablation_prompt(rec.knowledge, i), completions[i]);

  QualityConfig cfg;
  cfg.sim = SimBackend::TokenF1;
  ScoreTable scores = importance_scores(rig_.gateway(), prompts_, rec, cfg);

  ASSERT_EQ(scores.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    double expected = -token_f1(completions[i], rec.reference_summary);
    TripleKey key{1, static_cast<int>(i) + 1};
    EXPECT_DOUBLE_EQ(scores[key], expected) << "ablation " << i;
  }
  // Exactly one summarizer call per insight.
  EXPECT_EQ(rig_.gateway().calls(Role::Summarizer), 3);
  EXPECT_EQ(rig_.backend(Role::Summarizer).chat_calls(), 3);
}

TEST_F(QualityTest, ImportanceScoresEmbeddingPathUsesCosine) {
  rig_.add_role(Role::Embedder);
  AugmentedRecord rec = mined_record({"first insight", "second insight"});
  rec.mark_stage(Stage::Verified);

  rig_.script(Role::Summarizer, ablation_prompt(rec.knowledge, 0), "ablated alpha");
  rig_.script(Role::Summarizer, ablation_prompt(rec.knowledge, 1), "ablated beta");
  rig_.script_embedding(Role::Embedder, "ablated alpha", {1.0, 0.0});
  rig_.script_embedding(Role::Embedder, "ablated beta", {0.0, 1.0});
  rig_.script_embedding(Role::Embedder, rec.reference_summary, {3.0, 4.0});

  QualityConfig cfg;
  cfg.sim = SimBackend::EmbeddingCosine;
  ScoreTable scores = importance_scores(rig_.gateway(), prompts_, rec, cfg);
  TripleKey first{1, 1};
  TripleKey second{1, 2};
  EXPECT_DOUBLE_EQ(scores[first], -0.6);
  EXPECT_DOUBLE_EQ(scores[second], -0.8);
  // The reference embedding is served from cache after the first ablation.
  EXPECT_EQ(rig_.backend(Role::Embedder).embed_calls(), 3);
}

TEST_F(QualityTest, ImportanceScoringPreconditions) {
  AugmentedRecord unverified = mined_record({"x"});
  EXPECT_THROW(importance_scores(rig_.gateway(), prompts_, unverified), std::invalid_argument);

  AugmentedRecord empty = mined_record({});
  empty.mark_stage(Stage::Verified);
  EXPECT_THROW(importance_scores(rig_.gateway(), prompts_, empty), std::invalid_argument);
}

TEST_F(QualityTest, ApplyScoresWritesAndScoresOfReadsBack) {
  AugmentedRecord rec = mined_record({"a", "b"});
  rec.mark_stage(Stage::Verified);
  EXPECT_THROW(scores_of(rec), UnscoredTripleError);

  ScoreTable scores = {{{1, 1}, -0.25}, {{1, 2}, -0.75}};
  AugmentedRecord scored = apply_scores(rec, scores);
  EXPECT_TRUE(scored.has_stage(Stage::Scored));
  EXPECT_DOUBLE_EQ(*scored.knowledge.triples[0].insight.importance_score, -0.25);
  EXPECT_EQ(scores_of(scored), scores);

  ScoreTable incomplete = {{{1, 1}, -0.5}};
  EXPECT_THROW(apply_scores(rec, incomplete), UnscoredTripleError);
}

TEST_F(QualityTest, PruneKeepsTopThreeWithOrderTieBreak) {
  AugmentedRecord rec = mined_record({"i1", "i2", "i3", "i4", "i5"});
  rec.mark_stage(Stage::Verified);
  ScoreTable scores = {{{1, 1}, -0.2}, {{1, 2}, -0.9}, {{1, 3}, -0.5},
                       {{1, 4}, -0.5}, {{1, 5}, -0.95}};
  AugmentedRecord pruned = prune_top_k(rec, scores);
  ASSERT_EQ(pruned.knowledge.triples.size(), 3u);
  EXPECT_EQ(pruned.knowledge.triples[0].question.question_index, 1);
  EXPECT_EQ(pruned.knowledge.triples[1].question.question_index, 3);
  EXPECT_EQ(pruned.knowledge.triples[2].question.question_index, 4);
  EXPECT_TRUE(pruned.has_stage(Stage::Scored));
  EXPECT_TRUE(pruned.has_stage(Stage::Pruned));
  EXPECT_DOUBLE_EQ(*pruned.knowledge.triples[0].insight.importance_score, -0.2);
}

TEST_F(QualityTest, PruneSelectsPerAspect) {
  AugmentedRecord rec = mined_record({"a1", "a2", "a3"}, {"b1", "b2", "b3"});
  rec.mark_stage(Stage::Verified);
  ScoreTable scores = {{{1, 1}, -0.9}, {{1, 2}, -0.1}, {{1, 3}, -0.5},
                       {{2, 1}, -0.4}, {{2, 2}, -0.8}, {{2, 3}, -0.2}};
  QualityConfig cfg;
  cfg.top_k = 2;
  AugmentedRecord pruned = prune_top_k(rec, scores, cfg);
  ASSERT_EQ(pruned.knowledge.triples.size(), 4u);
  EXPECT_EQ(pruned.knowledge.triples[0].question, (Question{1, 2, "question 1.2"}));
  EXPECT_EQ(pruned.knowledge.triples[1].question.question_index, 3);
  EXPECT_EQ(pruned.knowledge.triples[2].question, (Question{2, 1, "question 2.1"}));
  EXPECT_EQ(pruned.knowledge.triples[3].question.question_index, 3);
}

TEST_F(QualityTest, PruneKeepsEverythingWhenKExceedsCount) {
  AugmentedRecord rec = mined_record({"only", "two"});
  rec.mark_stage(Stage::Verified);
  ScoreTable scores = {{{1, 1}, -0.7}, {{1, 2}, -0.3}};
  AugmentedRecord pruned = prune_top_k(rec, scores);
  EXPECT_EQ(pruned.knowledge.triples.size(), 2u);
  EXPECT_EQ(pruned.knowledge.triples[0].question.question_index, 1);  // order preserved
}

TEST_F(QualityTest, PruneAllTiesKeepsTheEarliest) {
  AugmentedRecord rec = mined_record({"t1", "t2", "t3", "t4"});
  rec.mark_stage(Stage::Verified);
  ScoreTable scores = {{{1, 1}, -0.5}, {{1, 2}, -0.5}, {{1, 3}, -0.5}, {{1, 4}, -0.5}};
  AugmentedRecord pruned = prune_top_k(rec, scores);
  ASSERT_EQ(pruned.knowledge.triples.size(), 3u);
  EXPECT_EQ(pruned.knowledge.triples[2].question.question_index, 3);
}

TEST_F(QualityTest, PruneRejectsNonPositiveK) {
  AugmentedRecord rec = mined_record({"x"});
  rec.mark_stage(Stage::Verified);
  QualityConfig cfg;
  cfg.top_k = 0;
  EXPECT_THROW(prune_top_k(rec, {{{1, 1}, -0.5}}, cfg), ConfigError);
}

TEST_F(QualityTest, EnhanceComposesVerifyScoreAndPrune) {
  AugmentedRecord rec = mined_record({"keep one", "drop me", "keep two"});
  script_critic("keep one", "Entailed");
  script_critic("drop me", "Refuted");
  script_critic("keep two", "Entailed");

  // Script ablations over the verified (post-filter) knowledge.
  KnowledgeSet surviving;
  surviving.aspects = rec.knowledge.aspects;
  surviving.triples = {rec.knowledge.triples[0], rec.knowledge.triples[2]};
  for (auto& tr : surviving.triples) tr.insight.factuality = Factuality::Entailed;
  script_constant_ablations(surviving, "a fixed summary");

  QualityConfig cfg;
  cfg.sim = SimBackend::TokenF1;
  EnhanceResult result = enhance(rig_.gateway(), prompts_, rec, cfg);
  ASSERT_TRUE(result.record.has_value());
  EXPECT_EQ(result.filter.refuted, 1);
  EXPECT_EQ(result.record->knowledge.triples.size(), 2u);
  EXPECT_EQ(result.record->provenance,
            (std::vector<Stage>{Stage::Mined, Stage::Verified, Stage::Scored, Stage::Pruned}));
}

TEST_F(QualityTest, EnhanceWithEveryInsightRefutedYieldsNoRecord) {
  AugmentedRecord rec = mined_record({"wrong one", "wrong two"});
  script_critic("wrong one", "Refuted");
  script_critic("wrong two", "Refuted");
  EnhanceResult result = enhance(rig_.gateway(), prompts_, rec);
  EXPECT_FALSE(result.record.has_value());
  EXPECT_EQ(result.filter.total, 2);
  EXPECT_EQ(result.filter.refuted, 2);
}

TEST_F(QualityTest, EnhanceIsIdempotentOnItsOwnOutput) {
  AugmentedRecord rec =
      mined_record({"alpha fact", "beta fact", "gamma fact", "delta fact", "epsilon fact"});
  for (const auto& tr : rec.knowledge.triples) script_critic(tr.insight.text, "Entailed");

  KnowledgeSet verified = rec.knowledge;
  for (auto& tr : verified.triples) tr.insight.factuality = Factuality::Entailed;
  script_constant_ablations(verified, "one unvarying summary");

  QualityConfig cfg;
  cfg.sim = SimBackend::TokenF1;
  EnhanceResult first = enhance(rig_.gateway(), prompts_, rec, cfg);
  ASSERT_TRUE(first.record.has_value());
  ASSERT_EQ(first.record->knowledge.triples.size(), 3u);

  // The rerun ablates over the pruned triples, so those prompts need
  // fixtures too; the completion stays the same.
  script_constant_ablations(first.record->knowledge, "one unvarying summary");
  EnhanceResult second = enhance(rig_.gateway(), prompts_, *first.record, cfg);
  ASSERT_TRUE(second.record.has_value());

  EXPECT_EQ(json(*first.record).dump(), json(*second.record).dump());
}

}  // namespace
