#include "pcf/negative_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcf/error.hpp"
#include "pcf/score_table.hpp"

namespace pcf {
namespace {

constexpr std::size_t kMinPositives = 20;
constexpr std::size_t kMaxValidation = 500;
constexpr int kSwapAttempts = 16;
constexpr int kNegativeAttempts = 16;
constexpr std::uint64_t kPairStream = 1;
constexpr std::uint64_t kSplitStream = 2;

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

double draw_fraction(FractionRange range, Rng& rng) {
  return std::uniform_real_distribution<double>(range.lo, range.hi)(rng);
}

void check_words(std::span<const std::string> words) {
  if (words.size() < 2) {
    throw Error(Errc::TooShort, "corruption needs at least two words");
  }
}

void check_spec(const CorruptionSpec& spec) {
  const auto& r = spec.fraction_range;
  if (spec.window < 1) throw Error(Errc::UsageError, "window must be >= 1");
  if (!(r.lo > 0.0 && r.lo <= r.hi && r.hi < 1.0)) {
    throw Error(Errc::UsageError, "fraction range must satisfy 0 < lo <= hi < 1");
  }
  const auto& w = spec.strategy_weights;
  if (std::any_of(w.begin(), w.end(), [](double x) { return !(x >= 0.0); }) ||
      w[0] + w[1] + w[2] <= 0.0) {
    throw Error(Errc::UsageError, "strategy weights must be non-negative, not all zero");
  }
}

}  // namespace

std::string_view strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::None: return "none";
    case Strategy::Adjacent: return "adjacent";
    case Strategy::Truncate: return "truncate";
    case Strategy::Swap: return "swap";
  }
  return "none";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::None, Strategy::Adjacent, Strategy::Truncate, Strategy::Swap}) {
    if (strategy_name(s) == name) return s;
  }
  throw Error(Errc::MalformedFile, "unknown strategy '" + std::string(name) + "'");
}

std::vector<std::string> split_words(std::string_view sentence) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && is_space(sentence[i])) ++i;
    const std::size_t start = i;
    while (i < sentence.size() && !is_space(sentence[i])) ++i;
    if (i > start) words.emplace_back(sentence.substr(start, i - start));
  }
  return words;
}

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::size_t round_count(double f, std::size_t n) {
  return static_cast<std::size_t>(std::round(f * static_cast<double>(n)));
}

std::size_t adjacent_index(std::size_t corpus_size, std::size_t i,
                           std::size_t window, Rng& rng) {
  if (corpus_size < 2) {
    throw Error(Errc::NoAdjacent, "a one-sentence corpus has no neighbours");
  }
  if (i >= corpus_size) {
    throw Error(Errc::IndexOutOfRange, "sentence index outside corpus");
  }
  window = std::max<std::size_t>(window, 1);
  const std::size_t lo = i >= window ? i - window : 0;
  const std::size_t hi = std::min(corpus_size - 1, i + window);
  // Draw over the span minus i, then skip over i.
  std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
  const std::size_t j = pick(rng);
  return j >= i ? j + 1 : j;
}

std::string adjacent_negative(std::span<const std::string> corpus,
                              std::size_t i, std::size_t window, Rng& rng) {
  return corpus[adjacent_index(corpus.size(), i, window, rng)];
}

std::vector<std::string> truncate_negative(std::span<const std::string> words,
                                           Rng& rng, FractionRange range) {
  check_words(words);
  const std::size_t n = words.size();
  const std::size_t removed =
      std::clamp<std::size_t>(round_count(draw_fraction(range, rng), n), 1, n - 1);
  return {words.begin(), words.end() - static_cast<std::ptrdiff_t>(removed)};
}

std::vector<std::string> swap_negative(std::span<const std::string> words,
                                       Rng& rng, FractionRange range) {
  check_words(words);
  const std::size_t n = words.size();
  const std::size_t m =
      std::min(n, std::max<std::size_t>(2, round_count(draw_fraction(range, rng), n)));

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> positions;
  positions.reserve(m);
  std::sample(all.begin(), all.end(), std::back_inserter(positions), m, rng);

  std::vector<std::string> selected;
  selected.reserve(m);
  for (auto p : positions) selected.push_back(words[p]);

  std::vector<std::string> permuted = selected;
  bool changed = false;
  for (int attempt = 0; attempt < kSwapAttempts && !changed; ++attempt) {
    permuted = selected;
    std::shuffle(permuted.begin(), permuted.end(), rng);
    changed = permuted != selected;
  }
  if (!changed) {
    permuted = selected;
    std::rotate(permuted.begin(), permuted.begin() + 1, permuted.end());
  }

  std::vector<std::string> out(words.begin(), words.end());
  for (std::size_t k = 0; k < m; ++k) out[positions[k]] = permuted[k];
  return out;
}

LabeledPairSet build_training_set(std::span<const SentencePair> positives,
                                  const CorruptionSpec& spec) {
  check_spec(spec);
  const std::size_t n = positives.size();
  if (n < kMinPositives) {
    throw Error(Errc::TooFewPairs, "need at least " + std::to_string(kMinPositives) +
                                       " positive pairs, got " + std::to_string(n));
  }
  std::vector<std::string> targets;
  targets.reserve(n);
  for (const auto& p : positives) targets.push_back(p.second);

  std::vector<LabeledPair> negatives(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(spec.seed, kPairStream, i));
    std::discrete_distribution<int> pick(spec.strategy_weights.begin(),
                                         spec.strategy_weights.end());
    const auto words = split_words(targets[i]);
    auto& neg = negatives[i];
    neg = {positives[i].first, {}, PairLabel::Negative, Strategy::None, i};

    for (int attempt = 0; attempt < kNegativeAttempts; ++attempt) {
      Strategy s = Strategy::Adjacent;
      const int drawn = pick(rng);
      if (words.size() >= 2) s = static_cast<Strategy>(drawn + 1);
      std::string candidate;
      switch (s) {
        case Strategy::Truncate:
          candidate = join_words(truncate_negative(words, rng, spec.fraction_range));
          break;
        case Strategy::Swap:
          candidate = join_words(swap_negative(words, rng, spec.fraction_range));
          break;
        default:
          candidate = adjacent_negative(targets, i, spec.window, rng);
          break;
      }
      if (candidate != targets[i]) {
        neg.target = std::move(candidate);
        neg.strategy = s;
        break;
      }
    }
    if (neg.strategy == Strategy::None) {
      // Every draw reproduced the target: take the nearest distinct sentence.
      for (std::size_t d = 1; d < n && neg.strategy == Strategy::None; ++d) {
        for (std::size_t j : {i - d, i + d}) {
          if (j < n && targets[j] != targets[i]) {
            neg.target = targets[j];
            neg.strategy = Strategy::Adjacent;
            break;
          }
        }
      }
      if (neg.strategy == Strategy::None) {
        throw Error(Errc::TooFewPairs, "every target sentence is identical");
      }
    }
  }

  const std::size_t val_origins = std::min(kMaxValidation, (2 * n) / 10) / 2;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(derive_seed(spec.seed, kSplitStream));
  std::shuffle(order.begin(), order.end(), split_rng);
  std::vector<char> in_validation(n, 0);
  for (std::size_t k = 0; k < val_origins; ++k) in_validation[order[k]] = 1;

  LabeledPairSet set;
  set.train.reserve(2 * (n - val_origins));
  set.validation.reserve(2 * val_origins);
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = in_validation[i] ? set.validation : set.train;
    dst.push_back({positives[i].first, positives[i].second, PairLabel::Positive,
                   Strategy::None, i});
    dst.push_back(std::move(negatives[i]));
  }
  return set;
}

std::vector<SentencePair> read_sentence_pairs(const std::filesystem::path& path) {
  std::vector<SentencePair> pairs;
  const auto lines = read_lines(path);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto fields = split(lines[n], '\t');
    if (fields.size() != 2) {
      throw Error(Errc::MalformedFile, path.string() + ":" + std::to_string(n + 1) +
                                           ": expected src<TAB>tgt");
    }
    pairs.emplace_back(std::string(fields[0]), std::string(fields[1]));
  }
  return pairs;
}

void write_labeled_pairs(std::span<const LabeledPair> pairs,
                         const std::filesystem::path& path) {
  std::string out;
  for (const auto& p : pairs) {
    out += p.source;
    out += '\t';
    out += p.target;
    out += p.label == PairLabel::Positive ? "\t1\t" : "\t0\t";
    out += strategy_name(p.strategy);
    out += '\n';
  }
  write_text(path, out);
}

std::vector<LabeledPair> read_labeled_pairs(const std::filesystem::path& path) {
  std::vector<LabeledPair> pairs;
  const auto lines = read_lines(path);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto fields = split(lines[n], '\t');
    if (fields.size() != 4 || (fields[2] != "0" && fields[2] != "1")) {
      throw Error(Errc::MalformedFile, path.string() + ":" + std::to_string(n + 1) +
                                           ": expected src<TAB>tgt<TAB>0|1<TAB>strategy");
    }
    pairs.push_back({std::string(fields[0]), std::string(fields[1]),
                     fields[2] == "1" ? PairLabel::Positive : PairLabel::Negative,
                     parse_strategy(fields[3]), pairs.size()});
  }
  return pairs;
}

std::filesystem::path validation_path(const std::filesystem::path& train_path) {
  auto p = train_path;
  p.replace_extension(".val" + train_path.extension().string());
  return p;
}

}  // namespace pcf
