#include "pcf/score_combiner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcf/error.hpp"

namespace pcf {
namespace {

double sort_key(const ScoreRecord& r) {
  return std::isnan(r.score) ? -std::numeric_limits<double>::infinity() : r.score;
}

}  // namespace

Normalization parse_normalization(std::string_view name) {
  if (name == "none") return Normalization::None;
  if (name == "minmax") return Normalization::MinMax;
  throw Error(Errc::UsageError, "unknown normalization '" + std::string(name) + "'");
}

std::string_view normalization_name(Normalization n) {
  return n == Normalization::MinMax ? "minmax" : "none";
}

ScoreTable minmax_normalize(const ScoreTable& scores) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t live = 0;
  for (const auto& r : scores) {
    if (r.rejected) continue;
    lo = std::min(lo, r.score);
    hi = std::max(hi, r.score);
    ++live;
  }
  if (live < 2 || !(hi > lo)) {
    throw Error(Errc::DegenerateRange,
                "min-max normalization needs two distinct non-rejected scores");
  }
  const double range = hi - lo;
  ScoreTable out = scores;
  for (auto& r : out) {
    if (!r.rejected) r.score = (r.score - lo) / range;
  }
  return out;
}

ScoreTable combine(const ScoreTable& base, const ScoreTable& custom,
                   const ScoreTable& cls, std::span<const std::uint8_t> mask,
                   const CombineConfig& config) {
  const std::size_t n = base.size();
  if (custom.size() != n || cls.size() != n || (!mask.empty() && mask.size() != n)) {
    throw Error(Errc::LengthMismatch,
                "score tables of sizes " + std::to_string(n) + ", " +
                    std::to_string(custom.size()) + ", " + std::to_string(cls.size()) +
                    (mask.empty() ? "" : ", mask " + std::to_string(mask.size())));
  }
  std::vector<char> rejected(n);
  for (std::size_t i = 0; i < n; ++i) {
    rejected[i] = (!mask.empty() && mask[i] == 0) || base[i].rejected ||
                  custom[i].rejected || cls[i].rejected;
  }
  // A pair rejected anywhere is left out of every component's min and max.
  auto prepare = [&](const ScoreTable& t) {
    if (config.normalization != Normalization::MinMax) return t;
    ScoreTable marked = t;
    for (std::size_t i = 0; i < n; ++i) marked[i].rejected = rejected[i];
    return minmax_normalize(marked);
  };
  const ScoreTable b = prepare(base);
  const ScoreTable c = prepare(custom);
  const ScoreTable k = prepare(cls);

  ScoreTable out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rejected[i]) {
      out[i] = {config.sentinel, true};
    } else {
      out[i] = {b[i].score + c[i].score + k[i].score, false};
    }
  }
  return out;
}

std::vector<std::size_t> rank_pairs(const ScoreTable& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sort_key(scores[a]) > sort_key(scores[b]);
  });
  return order;
}

SelectionReport select_by_budget(const ScoreTable& scores,
                                 std::span<const std::size_t> english_tokens,
                                 std::size_t budget) {
  if (english_tokens.size() != scores.size()) {
    throw Error(Errc::LengthMismatch,
                std::to_string(scores.size()) + " scores but " +
                    std::to_string(english_tokens.size()) + " token counts");
  }
  SelectionReport report;
  for (const auto& r : scores) report.rejected_by_langid += r.rejected;
  for (std::size_t i : rank_pairs(scores)) {
    if (scores[i].rejected) continue;
    if (report.cumulative_tokens >= budget) break;
    report.kept_indices.push_back(i);
    report.cumulative_tokens += english_tokens[i];
    report.cutoff_score = scores[i].score;
  }
  return report;
}

std::vector<std::size_t> count_english_tokens(std::span<const std::string> sentences) {
  std::vector<std::size_t> counts;
  counts.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::size_t tokens = 0;
    bool in_word = false;
    for (char ch : s) {
      const bool space = ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' ||
                         ch == '\v' || ch == '\f';
      if (!space && !in_word) ++tokens;
      in_word = !space;
    }
    counts.push_back(tokens);
  }
  return counts;
}

void write_submission(const ScoreTable& scores,
                      std::span<const std::string> src_sentences,
                      std::span<const std::string> tgt_sentences,
                      const std::filesystem::path& path) {
  if (src_sentences.size() != scores.size() || tgt_sentences.size() != scores.size()) {
    throw Error(Errc::LengthMismatch, "sentence files do not match the score table");
  }
  std::string out;
  for (std::size_t i : rank_pairs(scores)) {
    out += format_score(scores[i].score);
    out += '\t';
    out += src_sentences[i];
    out += '\t';
    out += tgt_sentences[i];
    out += '\n';
  }
  write_text(path, out);
}

}  // namespace pcf
