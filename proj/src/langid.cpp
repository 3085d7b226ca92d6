#include "pcf/langid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>

#include "binary_io.hpp"
#include "pcf/error.hpp"
#include "pcf/score_table.hpp"

namespace pcf {
namespace {

constexpr std::uint32_t kModelVersion = 1;
constexpr int kMaxOrder = 9;

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' ||
         c == U'\f';
}

// Collapses whitespace runs to one space and trims both ends.
std::u32string squeeze(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    if (is_space(c)) {
      if (!out.empty() && out.back() != U' ') out.push_back(U' ');
    } else {
      out.push_back(c);
    }
  }
  if (!out.empty() && out.back() == U' ') out.pop_back();
  return out;
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

std::string format_fraction(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", f);
  return buf;
}

}  // namespace

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t c = 0;
    if (b < 0x80) {
      c = b;
    } else if ((b & 0xE0) == 0xC0) {
      c = b & 0x1F;
      extra = 1;
    } else if ((b & 0xF0) == 0xE0) {
      c = b & 0x0F;
      extra = 2;
    } else if ((b & 0xF8) == 0xF0) {
      c = b & 0x07;
      extra = 3;
    } else {
      out.push_back(U'�');
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; ok && k <= extra; ++k) {
      if (i + k >= text.size()) {
        ok = false;
        break;
      }
      const auto cb = static_cast<unsigned char>(text[i + k]);
      if ((cb & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      c = (c << 6) | (cb & 0x3F);
    }
    if (!ok) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(c);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

std::vector<std::string> char_ngrams(std::u32string_view text, int order) {
  std::u32string padded;
  padded.reserve(text.size() + 2);
  padded.push_back(U' ');
  padded.append(text);
  padded.push_back(U' ');
  std::vector<std::string> grams;
  for (int o = 1; o <= order; ++o) {
    const auto n = static_cast<std::size_t>(o);
    if (padded.size() < n) break;
    for (std::size_t i = 0; i + n <= padded.size(); ++i) {
      std::string key(1, static_cast<char>('0' + o));
      for (std::size_t j = i; j < i + n; ++j) append_utf8(key, padded[j]);
      grams.push_back(std::move(key));
    }
  }
  return grams;
}

std::size_t LangIdModel::language_index(std::string_view code) const {
  for (std::size_t i = 0; i < languages.size(); ++i) {
    if (languages[i].code == code) return i;
  }
  throw Error(Errc::UnknownLanguage, "language '" + std::string(code) +
                                         "' is not in the model");
}

double LangIdModel::log_likelihood(std::size_t language,
                                   std::span<const std::string> grams) const {
  const Language& lang = languages[language];
  double sum = 0.0;
  for (const auto& g : grams) {
    const auto it = lang.log_probs.find(g);
    sum += it != lang.log_probs.end()
               ? it->second
               : lang.unseen_log_prob[static_cast<std::size_t>(g[0] - '1')];
  }
  return sum;
}

double LangIdVerdict::fraction(std::string_view code) const {
  const auto it = fractions.find(std::string(code));
  if (it == fractions.end()) {
    throw Error(Errc::UnknownLanguage,
                "verdict has no language '" + std::string(code) + "'");
  }
  return it->second;
}

LangIdModel train_langid(
    const std::map<std::string, std::vector<std::string>>& corpora,
    int ngram_order) {
  for (const auto& [code, sentences] : corpora) {
    if (sentences.empty()) {
      throw Error(Errc::EmptyCorpus, "corpus for '" + code + "' is empty");
    }
  }
  if (corpora.size() < 2) {
    throw Error(Errc::NeedTwoLanguages, "language ID needs at least two corpora");
  }
  if (ngram_order < 1 || ngram_order > kMaxOrder) {
    throw Error(Errc::UsageError, "n-gram order must be in [1, 9]");
  }
  const auto orders = static_cast<std::size_t>(ngram_order);

  std::vector<std::unordered_map<std::string, std::size_t>> counts;
  std::vector<std::vector<double>> totals;
  std::vector<std::set<std::string>> vocab(orders);
  for (const auto& [code, sentences] : corpora) {
    auto& c = counts.emplace_back();
    auto& t = totals.emplace_back(orders, 0.0);
    for (const auto& s : sentences) {
      for (auto& g : char_ngrams(squeeze(decode_utf8(s)), ngram_order)) {
        const auto o = static_cast<std::size_t>(g[0] - '1');
        t[o] += 1.0;
        vocab[o].insert(g);
        ++c[std::move(g)];
      }
    }
  }

  LangIdModel model;
  model.ngram_order = ngram_order;
  std::size_t li = 0;
  for (const auto& entry : corpora) {
    LangIdModel::Language lang;
    lang.code = entry.first;
    std::vector<double> denom(orders);
    for (std::size_t o = 0; o < orders; ++o) {
      // +1 for the bucket holding every gram outside the union vocabulary.
      denom[o] = totals[li][o] + static_cast<double>(vocab[o].size()) + 1.0;
      lang.unseen_log_prob.push_back(-std::log(denom[o]));
    }
    for (const auto& [gram, count] : counts[li]) {
      const auto o = static_cast<std::size_t>(gram[0] - '1');
      lang.log_probs.emplace(
          gram, std::log((static_cast<double>(count) + 1.0) / denom[o]));
    }
    lang.vocab_size = counts[li].size();
    model.languages.push_back(std::move(lang));
    ++li;
  }
  return model;
}

LangIdVerdict identify(std::string_view sentence, const LangIdModel& model,
                       const WindowConfig& windows) {
  LangIdVerdict verdict;
  const std::size_t languages = model.languages.size();
  const std::u32string text = squeeze(decode_utf8(sentence));
  if (text.empty() || languages == 0) {
    for (const auto& lang : model.languages) {
      verdict.fractions[lang.code] = 1.0 / static_cast<double>(languages);
    }
    return verdict;
  }

  const std::size_t width = std::max<std::size_t>(windows.width, 1);
  const std::size_t stride = std::max<std::size_t>(windows.stride, 1);
  std::vector<std::size_t> votes(languages, 0);
  std::size_t total = 0;
  for (std::size_t start = 0;; start += stride) {
    const std::size_t end = std::min(text.size(), start + width);
    const auto grams = char_ngrams(
        std::u32string_view(text).substr(start, end - start), model.ngram_order);
    std::size_t best = 0;
    double best_ll = model.log_likelihood(0, grams);
    for (std::size_t l = 1; l < languages; ++l) {
      const double ll = model.log_likelihood(l, grams);
      if (ll > best_ll) {
        best = l;
        best_ll = ll;
      }
    }
    ++votes[best];
    ++total;
    if (start + width >= text.size()) break;
  }
  for (std::size_t l = 0; l < languages; ++l) {
    verdict.fractions[model.languages[l].code] =
        static_cast<double>(votes[l]) / static_cast<double>(total);
  }
  return verdict;
}

bool gate(const LangIdVerdict& verdict, std::string_view source_lang,
          double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(Errc::UsageError, "threshold must be in [0, 1]");
  }
  return verdict.fraction(source_lang) >= threshold;
}

void write_langid_model(const LangIdModel& model,
                        const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.put_bytes("LID1");
  w.put(kModelVersion);
  w.put(static_cast<std::uint32_t>(model.ngram_order));
  w.put(static_cast<std::uint32_t>(model.languages.size()));
  for (const auto& lang : model.languages) {
    w.put_string(lang.code);
    w.put(static_cast<std::uint64_t>(lang.vocab_size));
    for (double u : lang.unseen_log_prob) w.put(u);
    std::vector<const std::pair<const std::string, double>*> sorted;
    sorted.reserve(lang.log_probs.size());
    for (const auto& kv : lang.log_probs) sorted.push_back(&kv);
    std::sort(sorted.begin(), sorted.end(),
              [](auto* a, auto* b) { return a->first < b->first; });
    w.put(static_cast<std::uint64_t>(sorted.size()));
    for (const auto* kv : sorted) {
      w.put_string(kv->first);
      w.put(kv->second);
    }
  }
  w.save(path);
}

LangIdModel read_langid_model(const std::filesystem::path& path) {
  detail::ByteReader r(path);
  r.expect_magic("LID1");
  if (r.get<std::uint32_t>() != kModelVersion) {
    throw Error(Errc::MalformedFile, path.string() + ": unsupported version");
  }
  LangIdModel model;
  model.ngram_order = static_cast<int>(r.get<std::uint32_t>());
  if (model.ngram_order < 1 || model.ngram_order > kMaxOrder) {
    throw Error(Errc::MalformedFile, path.string() + ": bad n-gram order");
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t l = 0; l < count; ++l) {
    LangIdModel::Language lang;
    lang.code = r.get_string();
    lang.vocab_size = static_cast<std::size_t>(r.get<std::uint64_t>());
    for (int o = 0; o < model.ngram_order; ++o) {
      lang.unseen_log_prob.push_back(r.get<double>());
    }
    const auto grams = r.get<std::uint64_t>();
    for (std::uint64_t g = 0; g < grams; ++g) {
      auto key = r.get_string();
      if (key.empty() || key[0] < '1' || key[0] > '0' + model.ngram_order) {
        throw Error(Errc::MalformedFile, path.string() + ": bad gram key");
      }
      const double lp = r.get<double>();
      lang.log_probs.emplace(std::move(key), lp);
    }
    model.languages.push_back(std::move(lang));
  }
  r.expect_end();
  if (model.languages.size() < 2) {
    throw Error(Errc::NeedTwoLanguages, path.string() + ": fewer than two languages");
  }
  return model;
}

void write_verdicts(const std::vector<VerdictRecord>& records,
                    const std::filesystem::path& path) {
  std::string out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    out += std::to_string(i);
    out += '\t';
    bool first = true;
    for (const auto& [code, f] : records[i].verdict.fractions) {
      if (!first) out += ',';
      first = false;
      out += code + ':' + format_fraction(f);
    }
    out += records[i].pass ? "\tpass\n" : "\tfail\n";
  }
  write_text(path, out);
}

std::vector<VerdictRecord> read_verdicts(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<VerdictRecord> records;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto where = path.string() + ":" + std::to_string(n + 1);
    const auto fields = split(lines[n], '\t');
    if (fields.size() != 3 || (fields[2] != "pass" && fields[2] != "fail")) {
      throw Error(Errc::MalformedFile, where + ": expected index<TAB>fractions<TAB>pass|fail");
    }
    if (fields[0] != std::to_string(records.size())) {
      throw Error(Errc::MalformedFile, where + ": indices must be consecutive from 0");
    }
    VerdictRecord rec;
    rec.pass = fields[2] == "pass";
    if (!fields[1].empty()) {
      for (auto item : split(fields[1], ',')) {
        const auto colon = item.rfind(':');
        if (colon == std::string_view::npos) {
          throw Error(Errc::MalformedFile, where + ": bad fraction '" + std::string(item) + "'");
        }
        try {
          rec.verdict.fractions[std::string(item.substr(0, colon))] =
              std::stod(std::string(item.substr(colon + 1)));
        } catch (const std::exception&) {
          throw Error(Errc::MalformedFile, where + ": bad fraction '" + std::string(item) + "'");
        }
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace pcf
