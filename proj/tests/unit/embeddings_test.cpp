#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "factuality/autodiff/tape.hpp"
#include "factuality/embeddings/table.hpp"
#include "factuality/errors.hpp"
#include "test_util.hpp"

namespace factuality::embeddings {
namespace {

constexpr const char* kTwoRows = "the 0.1 0.2 0.3\nJo -1 0 1\n";

EmbeddingTable two_rows(std::uint64_t seed = 7) {
  std::istringstream in(kTwoRows);
  return EmbeddingTable::load(in, 3, seed);
}

TEST(EmbeddingTableTest, LoadsRowsAndUnk) {
  const EmbeddingTable table = two_rows();
  EXPECT_EQ(table.size(), 2u);
  EXPECT_EQ(table.dim(), 3u);
  auto v = table.lookup("the");
  EXPECT_EQ(std::vector<double>(v.begin(), v.end()), (std::vector<double>{0.1, 0.2, 0.3}));
  EXPECT_TRUE(table.contains("jo"));
}

TEST(EmbeddingTableTest, UnknownTokenGetsUnkVector) {
  const EmbeddingTable table = two_rows();
  auto unk = table.unk();
  auto v = table.lookup("banana");
  EXPECT_TRUE(std::equal(v.begin(), v.end(), unk.begin(), unk.end()));
  for (double x : unk) {
    EXPECT_GE(x, -1.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(EmbeddingTableTest, UnkIsDeterministicInSeed) {
  const EmbeddingTable ta = two_rows(11), tb = two_rows(11), tc = two_rows(12);
  auto a = ta.unk();
  auto b = tb.unk();
  auto c = tc.unk();
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  EXPECT_FALSE(std::equal(a.begin(), a.end(), c.begin(), c.end()));
}

TEST(EmbeddingTableTest, FirstOccurrenceWinsAcrossCase) {
  std::istringstream in("The 1 1\nthe 2 2\n");
  const EmbeddingTable table = EmbeddingTable::load(in, 2, 0);
  EXPECT_EQ(table.size(), 1u);
  EXPECT_EQ(table.lookup("THE")[0], 1.0);
}

TEST(EmbeddingTableTest, VocabularyFilterKeepsOnlyListedRows) {
  std::istringstream in("The 1 1\nbanana 2 2\ncat 3 3\n");
  const std::unordered_set<std::string> keep{"the", "cat", "absent"};
  const EmbeddingTable table = EmbeddingTable::load(in, 2, 0, &keep);
  EXPECT_EQ(table.size(), 2u);
  EXPECT_TRUE(table.contains("the"));
  EXPECT_FALSE(table.contains("banana"));
  std::istringstream wrong("banana 1 2 3\n");
  EXPECT_THROW(EmbeddingTable::load(wrong, 2, 0, &keep), DimensionError);
}

TEST(EmbeddingTableTest, MalformedLinesReportLineNumbers) {
  std::istringstream bad_float("a 1 2\nb 1 x\n");
  try {
    EmbeddingTable::load(bad_float, 2, 0);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream short_row("a 1 2\nb 1\n");
  try {
    EmbeddingTable::load(short_row, 2, 0);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream wrong_dim("a 1 2 3 4\n");
  EXPECT_THROW(EmbeddingTable::load(wrong_dim, 3, 0), DimensionError);
}

TEST(EmbedTokenTest, UncasedAndFeatureConcatenation) {
  const EmbeddingTable table = two_rows();
  EXPECT_EQ(embed_token(table, "The"), embed_token(table, "the"));
  const std::vector<double> features(7, 0.5);
  EXPECT_EQ(embed_token(table, "the", &features).size(), 10u);
  auto unk = table.unk();
  EXPECT_EQ(embed_token(table, "zzz"), std::vector<double>(unk.begin(), unk.end()));
}

TEST(EmbedSentenceTest, ShapesAndRowPermutation) {
  const EmbeddingTable table = two_rows();
  corpus::Sentence s;
  s.id = "s";
  s.tokens = {"Jo", "the", "zzz"};
  s.lemmas = {"jo", "the", "zzz"};
  autodiff::Tensor m = embed_sentence(table, s);
  EXPECT_EQ(m.shape(), (autodiff::Shape{3, 3}));
  EXPECT_FALSE(m.trainable());

  FeatureProvider features{2, [](std::string_view lemma) {
                             return std::vector<double>{lemma == "the" ? 1.0 : 0.0, 0.25};
                           }};
  autodiff::Tensor with = embed_sentence(table, s, features);
  EXPECT_EQ(with.shape(), (autodiff::Shape{3, 5}));
  EXPECT_EQ(with.row(1)[3], 1.0);

  corpus::Sentence reversed = s;
  std::reverse(reversed.tokens.begin(), reversed.tokens.end());
  std::reverse(reversed.lemmas.begin(), reversed.lemmas.end());
  autodiff::Tensor r = embed_sentence(table, reversed, features);
  for (std::size_t t = 0; t < 3; ++t) {
    auto a = with.row(t);
    auto b = r.row(2 - t);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }

  corpus::Sentence empty;
  EXPECT_THROW(embed_sentence(table, empty), DataError);
}

TEST(EmbedSentenceTest, NoGradientReachesEmbeddings) {
  const EmbeddingTable table = two_rows();
  corpus::Sentence s;
  s.tokens = {"the", "jo"};
  s.lemmas = s.tokens;
  autodiff::Tensor m = embed_sentence(table, s);
  autodiff::Tensor w({1, 3}, {1.0, -1.0, 0.5}, true);
  autodiff::Tensor b({1}, {0.0}, true);
  autodiff::Tape tape;
  auto x = tape.input(m);
  auto y = tape.affine(tape.leaf(w), tape.row(x, 0), tape.leaf(b));
  tape.backward(tape.huber(tape.sum_elements(y), 1.0));
  EXPECT_FALSE(m.has_grad());
  EXPECT_TRUE(w.has_grad());
  auto v = table.lookup("the");
  EXPECT_EQ(std::vector<double>(v.begin(), v.end()), (std::vector<double>{0.1, 0.2, 0.3}));
}

}  // namespace
}  // namespace factuality::embeddings
