#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pcf {

// Character n-gram Bayes classifier. Grams of every order 1..order are
// scored; each order has its own add-one smoothed distribution per language
// over the union vocabulary plus one unseen bucket.
struct LangIdModel {
  struct Language {
    std::string code;
    std::unordered_map<std::string, double> log_probs;
    std::vector<double> unseen_log_prob;  // per order, index 0 = order 1
    std::size_t vocab_size = 0;           // distinct grams observed

    friend bool operator==(const Language&, const Language&) = default;
  };

  int ngram_order = 3;
  std::vector<Language> languages;  // sorted by code

  std::size_t language_index(std::string_view code) const;
  double log_likelihood(std::size_t language,
                        std::span<const std::string> grams) const;

  friend bool operator==(const LangIdModel&, const LangIdModel&) = default;
};

struct LangIdVerdict {
  std::map<std::string, double> fractions;

  double fraction(std::string_view code) const;
};

struct WindowConfig {
  std::size_t width = 20;
  std::size_t stride = 10;
};

LangIdModel train_langid(
    const std::map<std::string, std::vector<std::string>>& corpora,
    int ngram_order = 3);

// Each window votes for its most likely language (ties go to the first code
// in sort order); fractions are vote shares. Blank input is uniform.
LangIdVerdict identify(std::string_view sentence, const LangIdModel& model,
                       const WindowConfig& windows = {});

// fractions[source_lang] >= threshold.
bool gate(const LangIdVerdict& verdict, std::string_view source_lang,
          double threshold = 0.8);

// Padded grams of orders 1..order over the code points of `text`.
std::vector<std::string> char_ngrams(std::u32string_view text, int order);
std::u32string decode_utf8(std::string_view text);

void write_langid_model(const LangIdModel& model,
                        const std::filesystem::path& path);
LangIdModel read_langid_model(const std::filesystem::path& path);

struct VerdictRecord {
  LangIdVerdict verdict;
  bool pass = false;
};

// TSV `index<TAB>lang:frac,lang:frac,...<TAB>pass|fail`.
void write_verdicts(const std::vector<VerdictRecord>& records,
                    const std::filesystem::path& path);
std::vector<VerdictRecord> read_verdicts(const std::filesystem::path& path);

}  // namespace pcf
