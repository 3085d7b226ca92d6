#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>

#include "pcf/langid.hpp"
#include "pcf/score_table.hpp"
#include "support.hpp"

using namespace pcf;
using pcf::testkit::code_of;

namespace {

const LangIdModel& disjoint_model() {
  static const LangIdModel model = [] {
    std::mt19937_64 rng(100);
    const auto greek = testkit::greek_language();
    const auto latin = testkit::latin_language();
    return train_langid({{greek.code, greek.corpus(300, rng)}, {latin.code, latin.corpus(300, rng)}});
  }();
  return model;
}

void expect_proper(const LangIdVerdict& v) {
  double total = 0.0;
  for (const auto& [code, f] : v.fractions) {
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    total += f;
  }
  EXPECT_NEAR(total, 1.0, 1e-6);
}

}  // namespace

TEST(LangId, TrainTwoLanguages) {
  const auto m = train_langid({{"en", {"the cat"}}, {"xx", {"ααα"}}});
  ASSERT_EQ(m.languages.size(), 2u);
  EXPECT_EQ(m.languages[0].code, "en");
  EXPECT_EQ(m.languages[1].code, "xx");
  EXPECT_EQ(m.ngram_order, 3);
}

TEST(LangId, TrainErrors) {
  EXPECT_EQ(code_of([] { train_langid({{"en", {}}}); }), Errc::EmptyCorpus);
  EXPECT_EQ(code_of([] { train_langid({{"en", {}}, {"xx", {"ααα"}}}); }), Errc::EmptyCorpus);
  EXPECT_EQ(code_of([] { train_langid({{"en", {"a b"}}}); }), Errc::NeedTwoLanguages);
  EXPECT_EQ(code_of([] { train_langid({{"en", {"a"}}, {"xx", {"β"}}}, 0); }), Errc::UsageError);
}

TEST(LangId, SmoothedDistributionsAreProper) {
  const auto m = train_langid({{"en", {"the cat sat", "a dog"}}, {"xx", {"αβγ δε"}}}, 2);
  for (const auto& lang : m.languages) {
    // Per order: observed + unseen mass over the union vocabulary sums to 1.
    for (int order = 1; order <= m.ngram_order; ++order) {
      std::size_t seen_union = 0;
      std::set<std::string> all;
      for (const auto& l : m.languages) {
        for (const auto& [g, lp] : l.log_probs) {
          if (g[0] == char('0' + order)) all.insert(g);
        }
      }
      double mass = 0.0;
      for (const auto& g : all) {
        const auto it = lang.log_probs.find(g);
        mass += std::exp(it != lang.log_probs.end() ? it->second
                                                    : lang.unseen_log_prob[order - 1]);
        ++seen_union;
      }
      mass += std::exp(lang.unseen_log_prob[order - 1]);
      EXPECT_NEAR(mass, 1.0, 1e-9) << lang.code << " order " << order << " " << seen_union;
    }
  }
}

TEST(LangId, EmptyInputIsUniform) {
  const auto& m = disjoint_model();
  for (const char* s : {"", "   ", "\t"}) {
    const auto v = identify(s, m);
    EXPECT_DOUBLE_EQ(v.fraction("en"), 0.5);
    EXPECT_DOUBLE_EQ(v.fraction("xx"), 0.5);
  }
}

TEST(LangId, HeldOutSentencesAreRecognized) {
  const auto& m = disjoint_model();
  std::mt19937_64 rng(200);
  for (const auto& lang : {testkit::greek_language(), testkit::latin_language()}) {
    for (int i = 0; i < 200; ++i) {
      const auto v = identify(lang.sentence(rng), m);
      expect_proper(v);
      EXPECT_EQ(v.fraction(lang.code), 1.0);
    }
  }
}

TEST(LangId, ConcatenatedHalvesSplitTheVote) {
  const auto& m = disjoint_model();
  std::mt19937_64 rng(300);
  const auto greek = testkit::greek_language();
  const auto latin = testkit::latin_language();
  for (int i = 0; i < 50; ++i) {
    std::string a, b;
    while (a.size() < 100) a += greek.word(rng) + " ";
    while (b.size() < 60) b += latin.word(rng) + " ";
    // Match character (not byte) lengths so the halves are even.
    while (decode_utf8(b).size() < decode_utf8(a).size()) b += latin.word(rng) + " ";
    const auto v = identify(a + b, m);
    expect_proper(v);
    EXPECT_GE(v.fraction("xx"), 0.3);
    EXPECT_LE(v.fraction("xx"), 0.7);
    EXPECT_FALSE(gate(v, "xx", 0.8));
  }
}

TEST(LangId, UnknownLanguage) {
  const auto v = identify("αβγ", disjoint_model());
  EXPECT_EQ(code_of([&] { v.fraction("ps"); }), Errc::UnknownLanguage);
  EXPECT_EQ(code_of([&] { gate(v, "ps"); }), Errc::UnknownLanguage);
  EXPECT_EQ(code_of([&] { disjoint_model().language_index("ps"); }), Errc::UnknownLanguage);
}

TEST(Gate, Examples) {
  EXPECT_TRUE(gate({{{"ps", 0.85}, {"en", 0.15}}}, "ps", 0.8));
  EXPECT_TRUE(gate({{{"ps", 0.8}, {"en", 0.2}}}, "ps", 0.8));
  EXPECT_FALSE(gate({{{"ps", 0.5}, {"en", 0.5}}}, "ps", 0.8));
  EXPECT_EQ(code_of([] { gate({{{"ps", 0.5}}}, "ps", 1.5); }), Errc::UsageError);
}

TEST(Gate, MonotoneInThreshold) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const double f = u(rng);
    const LangIdVerdict v{{{"a", f}, {"b", 1 - f}}};
    bool prev = true;
    for (double th = 0.0; th <= 1.0; th += 0.05) {
      const bool now = gate(v, "a", th);
      EXPECT_FALSE(now && !prev);
      prev = now;
    }
  }
}

TEST(CharNgrams, PaddingAndOrders) {
  const auto grams = char_ngrams(U"ab", 2);
  // " ab " yields 4 unigrams and 3 bigrams.
  EXPECT_EQ(grams.size(), 7u);
  EXPECT_EQ(decode_utf8("αβ").size(), 2u);
}

TEST(LangId, WhitespaceRunsCollapse) {
  const auto& m = disjoint_model();
  EXPECT_EQ(identify("abc   def\t ghi", m).fractions, identify("abc def ghi", m).fractions);
}

TEST(LangIdModelFile, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "pcf_langid_test";
  std::filesystem::create_directories(dir);
  write_langid_model(disjoint_model(), dir / "m.bin");
  const auto back = read_langid_model(dir / "m.bin");
  EXPECT_TRUE(back == disjoint_model());
  write_text(dir / "junk.bin", "LID1xx");
  EXPECT_EQ(code_of([&] { read_langid_model(dir / "junk.bin"); }), Errc::MalformedFile);
}

TEST(Verdicts, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "pcf_langid_test";
  std::filesystem::create_directories(dir);
  const std::vector<VerdictRecord> records{{{{{"en", 0.25}, {"xx", 0.75}}}, false},
                                           {{{{"en", 0.0}, {"xx", 1.0}}}, true}};
  write_verdicts(records, dir / "v.tsv");
  const auto back = read_verdicts(dir / "v.tsv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].verdict.fractions, records[0].verdict.fractions);
  EXPECT_FALSE(back[0].pass);
  EXPECT_TRUE(back[1].pass);
}
