#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "factuality/corpus/sentence.hpp"
#include "factuality/errors.hpp"
#include "factuality/evaluation/analysis.hpp"
#include "factuality/evaluation/metrics.hpp"

namespace factuality::evaluation {
namespace {

constexpr std::size_t R = corpus::Sentence::kRoot;

corpus::Sentence make_sentence(std::string id, std::vector<std::string> tokens, std::vector<std::string> lemmas,
                               std::vector<std::size_t> heads, std::vector<std::string> deprels) {
  corpus::Sentence s;
  s.id = std::move(id);
  s.tokens = std::move(tokens);
  s.lemmas = std::move(lemmas);
  s.upos.assign(s.tokens.size(), "X");
  s.heads = std::move(heads);
  s.deprels = std::move(deprels);
  s.validate();
  return s;
}

// A small corpus covering the analysis rules.
corpus::Corpus analysis_corpus() {
  corpus::Corpus c;
  c.add(make_sentence("will", {"Jo", "will", "leave"}, {"Jo", "will", "leave"}, {2, 2, R},
                      {"nsubj", "aux", "root"}));
  c.add(make_sentence("didnt", {"Jo", "did", "n't", "leave"}, {"Jo", "do", "not", "leave"}, {3, 3, 3, R},
                      {"nsubj", "aux", "neg", "root"}));
  c.add(make_sentence("cant", {"Jo", "ca", "n't", "leave"}, {"Jo", "can", "not", "leave"}, {3, 3, 3, R},
                      {"nsubj", "aux", "advmod", "root"}));
  c.add(make_sentence("ll", {"I", "'ll", "go"}, {"I", "will", "go"}, {2, 2, R}, {"nsubj", "aux", "root"}));
  c.add(make_sentence("plain", {"Jo", "left"}, {"Jo", "leave"}, {1, R}, {"nsubj", "root"}));
  c.add(make_sentence("manage", {"Jo", "managed", "to", "leave"}, {"Jo", "manage", "to", "leave"}, {1, R, 3, 1},
                      {"nsubj", "root", "mark", "xcomp"}));
  c.add(make_sentence("notmanage", {"Jo", "did", "not", "manage", "to", "leave"},
                      {"Jo", "do", "not", "manage", "to", "leave"}, {3, 3, 3, R, 5, 3},
                      {"nsubj", "aux", "neg", "root", "mark", "xcomp"}));
  c.add(make_sentence("hope", {"We", "hope", "to", "win"}, {"we", "hope", "to", "win"}, {1, R, 3, 1},
                      {"nsubj", "root", "mark", "xcomp"}));
  c.add(make_sentence("seem", {"Jo", "seems", "to", "win"}, {"Jo", "seem", "to", "win"}, {1, R, 3, 1},
                      {"nsubj", "root", "mark", "xcomp"}));
  return c;
}

TEST(Metrics, PerfectPredictions) {
  const std::vector<double> x{-1, 0.5, 2, 3};
  EXPECT_EQ(mae(x, x), 0.0);
  ASSERT_TRUE(pearson(x, x).has_value());
  EXPECT_NEAR(*pearson(x, x), 1.0, 1e-15);
}

TEST(Metrics, HandComputedValues) {
  const std::vector<double> p{1, 2, 3}, g{1, 3, 2};
  EXPECT_NEAR(mae(p, g), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(*pearson(p, g), 0.5, 1e-15);
  const std::vector<double> anti{3, 2, 1};
  EXPECT_NEAR(*pearson(p, anti), -1.0, 1e-15);
}

TEST(Metrics, ZeroVarianceIsUndefined) {
  const std::vector<double> c(4, 3.0), g{0, 1, 2, 3};
  EXPECT_FALSE(pearson(c, g).has_value());
  EXPECT_FALSE(pearson(g, c).has_value());
  EXPECT_EQ(format_pearson(pearson(c, g)), "NAN");
}

TEST(Metrics, RejectsBadLengths) {
  const std::vector<double> a{1, 2}, b{1}, empty;
  EXPECT_THROW(mae(a, b), DimensionError);
  EXPECT_THROW(pearson(a, b), DimensionError);
  EXPECT_THROW(mae(empty, empty), std::invalid_argument);
}

TEST(Metrics, PearsonAffineInvarianceAndMaeSymmetry) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> d(0.0, 1.5);
  std::uniform_real_distribution<double> slope(0.1, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x, y;
    for (int i = 0; i < 30; ++i) {
      x.push_back(d(rng));
      y.push_back(0.5 * x.back() + d(rng));
    }
    const double a = slope(rng), b = d(rng);
    std::vector<double> xs;
    for (double v : x) xs.push_back(a * v + b);
    EXPECT_NEAR(*pearson(xs, y), *pearson(x, y), 1e-12);
    EXPECT_NEAR(*pearson(y, xs), *pearson(x, y), 1e-12);
    EXPECT_EQ(mae(x, y), mae(y, x));
    EXPECT_EQ(mae(x, x), 0.0);
  }
}

TEST(Reports, ConstantBaseline) {
  const std::vector<double> g{3.0, 2.25, -3.0, 0.0};
  const EvalReport r = constant_baseline(g, "UW", "test");
  EXPECT_NEAR(r.mae, (0.0 + 0.75 + 6.0 + 3.0) / 4.0, 1e-15);
  EXPECT_FALSE(r.pearson.has_value());
  EXPECT_EQ(r.n, 4u);
  const auto j = to_json(r);
  EXPECT_EQ(j["pearson"], "NAN");
  EXPECT_EQ(j["dataset"], "UW");
}

TEST(Reports, EvaluateNeedsPredictions) {
  std::vector<PredictionRecord> recs{{"a", 0, 1.0, 2.0, {}}, {"b", 0, -1.0, std::nullopt, {}}};
  EXPECT_THROW(evaluate(recs, "UW", "dev"), std::invalid_argument);
  recs.pop_back();
  recs.push_back({"b", 1, 3.0, 0.0, {}});
  const EvalReport r = evaluate(recs, "UW", "dev");
  EXPECT_NEAR(r.mae, 2.0, 1e-15);
  ASSERT_TRUE(r.pearson.has_value());
  EXPECT_NEAR(*r.pearson, -1.0, 1e-15);
}

TEST(ModalContext, RuleApplication) {
  const corpus::Corpus c = analysis_corpus();
  EXPECT_EQ(modal_context(*c.find("will"), 2), (ModalContext{"will", false}));
  EXPECT_EQ(modal_context(*c.find("didnt"), 3), (ModalContext{"none", true}));
  EXPECT_EQ(modal_context(*c.find("cant"), 3), (ModalContext{"ca(n't)", true}));
  EXPECT_EQ(modal_context(*c.find("ll"), 2), (ModalContext{"(wi)'ll", false}));
  EXPECT_EQ(modal_context(*c.find("plain"), 1), (ModalContext{"none", false}));
  // Only direct dependents count.
  EXPECT_EQ(modal_context(*c.find("notmanage"), 5), (ModalContext{"none", false}));
  EXPECT_TRUE(directly_negated(*c.find("notmanage"), 3));
}

TEST(Breakdowns, ModalGroupsPartitionRecords) {
  const corpus::Corpus c = analysis_corpus();
  const std::vector<PredictionRecord> recs{
      {"will", 2, -2.0, -1.0, {}}, {"didnt", 3, -3.0, -2.0, {}}, {"plain", 1, 3.0, 2.0, {}},
      {"manage", 1, 3.0, 3.0, {}}, {"manage", 3, 2.0, 1.0, {}},   {"ll", 2, -1.0, std::nullopt, {}},
      {"missing", 0, 0.0, 0.0, {}}};
  const auto rows = breakdown_modal_negation(recs, c);
  std::size_t total = 0;
  for (const auto& r : rows) total += r.n;
  EXPECT_EQ(total, recs.size() - 1);
  ASSERT_EQ(rows.front().modal, "none");
  EXPECT_FALSE(rows.front().negated);
  EXPECT_NEAR(rows.front().mean_gold, 8.0 / 3.0, 1e-12);
  EXPECT_NEAR(*rows.front().mae, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(rows.back().modal, "none");
  EXPECT_TRUE(rows.back().negated);
  for (const auto& r : rows) {
    if (r.modal == "(wi)'ll") EXPECT_FALSE(r.mae.has_value());
  }
  std::ostringstream text, csv;
  write_modal_table(text, rows);
  write_modal_csv(csv, rows);
  EXPECT_NE(text.str().find("(wi)'ll"), std::string::npos);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "modal,negated,mean_gold,mae,n");
}

TEST(Breakdowns, RelationUsesOwnDeprel) {
  const corpus::Corpus c = analysis_corpus();
  const std::vector<PredictionRecord> recs{{"plain", 1, 2.0, 1.0, {}},   {"will", 2, 1.0, 0.0, {}},
                                           {"manage", 3, 3.0, 2.0, {}},  {"hope", 3, -2.0, -1.0, {}},
                                           {"seem", 3, 0.0, 0.5, {}},    {"manage", 0, 3.0, 3.0, {}}};
  const auto rows = breakdown_relation(recs, c);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].deprel, "xcomp");
  EXPECT_EQ(rows[0].n, 3u);
  EXPECT_NEAR(rows[0].mean_gold, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(*rows[0].mean_prediction, 0.5, 1e-12);
  EXPECT_EQ(rows[1].deprel, "root");
  EXPECT_EQ(rows[1].n, 2u);
  EXPECT_EQ(rows[2].deprel, "nsubj");
  EXPECT_EQ(breakdown_relation(recs, c, 1).size(), 1u);
}

TEST(Breakdowns, TopErrors) {
  std::vector<PredictionRecord> recs;
  for (int i = 0; i < 5; ++i) recs.push_back({"s" + std::to_string(4 - i), 0, 1.0, 1.0, {}});
  auto rows = top_errors(recs, 10);
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].abs_error, 0.0);
    EXPECT_EQ(rows[i].sentence_id, "s" + std::to_string(i));
  }
  recs.push_back({"outlier", 3, 3.0, -3.0, {}});
  rows = top_errors(recs, 2);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].sentence_id, "outlier");
  EXPECT_EQ(rows[0].abs_error, 6.0);
}

TEST(Breakdowns, XcompVerbMeans) {
  const corpus::Corpus c = analysis_corpus();
  EXPECT_TRUE(xcomp_verb_means({}, c).empty());
  const std::vector<PredictionRecord> recs{{"manage", 3, 2.0, 3.0, {}},
                                           {"notmanage", 5, -2.0, -3.0, {}},
                                           {"hope", 3, -1.0, -2.0, {}},
                                           {"seem", 3, 0.0, 1.0, {}}};
  auto rows = xcomp_verb_means(recs, c);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].verb, "manage to");
  EXPECT_EQ(rows[0].n, 1u);
  EXPECT_EQ(rows[0].mean_gold, 2.0);
  EXPECT_EQ(rows[1].verb, "hope to");
  EXPECT_NEAR(*rows[1].mae, 1.0, 1e-15);
  rows = xcomp_verb_means(recs, c, false);
  ASSERT_EQ(rows[0].verb, "manage to");
  EXPECT_EQ(rows[0].n, 2u);
  EXPECT_EQ(rows[0].mean_gold, 0.0);
  EXPECT_EQ(infinitival_verbs().size(), 15u);
}

}  // namespace
}  // namespace factuality::evaluation
