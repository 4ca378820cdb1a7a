#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "eraclass/error.hpp"
#include "eraclass/rng.hpp"
#include "eraclass/textprep.hpp"
#include "eraclass/utf8.hpp"
#include "reference_values.hpp"

using namespace eraclass;

namespace {

const std::string kFixtures = ERACLASS_FIXTURES;

using reference::kExampleLemmatized;
using reference::kExampleNormalized;
using reference::kExampleOriginal;
using reference::kExampleStopwordsRemoved;

}  // namespace

TEST(Rng, StandardMt19937_64Vector) {
  Rng rng(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  EXPECT_EQ(v, 9981545732273789042ULL);
}

TEST(Rng, UniformIndexStaysInRangeAndCoversIt) {
  Rng rng(1);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = rng.uniform_index(7);
    ASSERT_LT(k, 7u);
    ++seen[k];
  }
  for (int c : seen) EXPECT_GT(c, 800);
  EXPECT_EQ(rng.uniform_index(1), 0u);
}

TEST(Rng, Uniform01IsHalfOpen) {
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, ShuffleIsSeededPermutation) {
  std::vector<int> a{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> b = a;
  Rng(9).shuffle(std::span<int>(a));
  Rng(9).shuffle(std::span<int>(b));
  EXPECT_EQ(a, b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
}

TEST(Rng, MixSeparatesStreams) {
  EXPECT_NE(Rng::mix(1, 0), Rng::mix(1, 1));
  EXPECT_NE(Rng::mix(1, 0), Rng::mix(2, 0));
  EXPECT_EQ(Rng::mix(3, 4), Rng::mix(3, 4));
}

TEST(Utf8, RoundTripAndCounting) {
  const std::string s = "aب€😀";
  EXPECT_EQ(utf8::count_codepoints(s), 4u);
  EXPECT_EQ(utf8::encode(utf8::decode(s)), s);
  EXPECT_EQ(utf8::split_codepoints(s), (std::vector<std::string>{"a", "ب", "€", "😀"}));
}

TEST(Utf8, MalformedBytesAreDropped) {
  const std::string bad = std::string("a") + char(0xC3) + "b" + char(0xE2) + char(0x82);
  EXPECT_EQ(utf8::encode(utf8::decode(bad)), "ab");
}

TEST(Utf8, SplitsOnUnicodeWhitespace) {
  EXPECT_EQ(utf8::split_whitespace(" a b\tc　 "), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(utf8::split_whitespace("   ").empty());
}

TEST(Clean, StripsPunctuationSymbolsDigitsAndTags) {
  EXPECT_EQ(clean("<p>مرحبا، يا عالم!</p>"), "مرحبا يا عالم");
  EXPECT_EQ(clean("a<br>b"), "a b");
  EXPECT_EQ(clean("سنة ١٢٣٤ و 2024"), "سنة و");
  EXPECT_EQ(clean("«قال» $5 + ؟"), "قال");
  EXPECT_EQ(clean("   "), "");
}

TEST(Clean, UnicodeCategoryTable) {
  for (char32_t cp : {U'!', U'$', U'+', U'^', U'،', U'؟', U'٪', U'«', U'\u2014', U'﴾'}) {
    EXPECT_TRUE(is_punctuation_or_symbol(cp)) << std::hex << static_cast<unsigned>(cp);
  }
  for (char32_t cp : {U'a', U'0', U'ا', U'\u0640', U'\u064E', U' '}) {
    EXPECT_FALSE(is_punctuation_or_symbol(cp)) << std::hex << static_cast<unsigned>(cp);
  }
}

TEST(Normalize, RemovesDiacriticsAndKashida) {
  EXPECT_EQ(normalize(reference::kKashidaInput), reference::kKashidaOutput);
  EXPECT_EQ(normalize("م\u064Eقبول\u064E"), "مقبول");
  EXPECT_EQ(normalize("\u064B\u0670\u065F"), "");
  EXPECT_EQ(normalize("plain text"), "plain text");
  EXPECT_TRUE(is_arabic_mark(0x0651));
  EXPECT_FALSE(is_arabic_mark(0x0660));
}

TEST(Preprocess, ExampleSentenceStageByStage) {
  const auto normalized = tokenize(kExampleOriginal);
  EXPECT_EQ(utf8::join(normalized, " "), kExampleNormalized);

  const auto filtered = remove_stopwords(normalized, builtin_stopwords());
  EXPECT_EQ(utf8::join(filtered, " "), kExampleStopwordsRemoved);

  const LemmaTable table = load_lemma_table(kFixtures + "/example_lemmas.tsv");
  EXPECT_EQ(utf8::join(lemmatize(normalized, table), " "), kExampleLemmatized);
}

TEST(Preprocess, PipelineFlags) {
  PrepConfig cfg;
  EXPECT_EQ(utf8::join(preprocess(kExampleOriginal, cfg), " "), kExampleNormalized);
  cfg.remove_stopwords = true;
  cfg.stopword_list = builtin_stopwords();
  EXPECT_EQ(utf8::join(preprocess(kExampleOriginal, cfg), " "), kExampleStopwordsRemoved);
  cfg.apply_lemmas = true;
  cfg.lemma_table = load_lemma_table(kFixtures + "/example_lemmas.tsv");
  EXPECT_EQ(utf8::join(preprocess(kExampleOriginal, cfg), " "), "تلوذ أكبر صغير رجا مقبول سؤال");
}

TEST(Preprocess, LemmasWithoutTableIsConfigError) {
  PrepConfig cfg;
  cfg.apply_lemmas = true;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Stopwords, BuiltinListLoadsAndParsesComments) {
  EXPECT_GT(builtin_stopwords().size(), 100u);
  EXPECT_TRUE(builtin_stopwords().count("في"));
  const auto set = parse_stopwords("# comment\nمن\n\nإلى\r\n");
  EXPECT_EQ(set, (StopwordSet{"من", "إلى"}));
}

TEST(Lemmas, MalformedTableIsDataError) {
  EXPECT_THROW(parse_lemma_table("onlyone\n"), DataError);
  EXPECT_EQ(parse_lemma_table("# c\nأ\tب\n").at("أ"), "ب");
}
