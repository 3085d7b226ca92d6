#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pcf/rng.hpp"

namespace pcf {

struct FractionRange {
  double lo = 0.3;
  double hi = 0.7;
};

enum class Strategy { None, Adjacent, Truncate, Swap };

std::string_view strategy_name(Strategy strategy);
Strategy parse_strategy(std::string_view name);

struct CorruptionSpec {
  std::size_t window = 2;
  FractionRange fraction_range;
  // Adjacent, truncate, swap.
  std::array<double, 3> strategy_weights = {1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
};

enum class PairLabel { Negative = 0, Positive = 1 };

struct LabeledPair {
  std::string source;
  std::string target;
  PairLabel label = PairLabel::Positive;
  Strategy strategy = Strategy::None;
  std::size_t origin = 0;  // index of the positive pair it came from

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

struct LabeledPairSet {
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> validation;

  friend bool operator==(const LabeledPairSet&, const LabeledPairSet&) = default;
};

using SentencePair = std::pair<std::string, std::string>;

// Whitespace tokenization; runs of whitespace never yield empty words.
std::vector<std::string> split_words(std::string_view sentence);
std::string join_words(std::span<const std::string> words);

// Index of a uniformly drawn neighbour within `window` of i, excluding i.
std::size_t adjacent_index(std::size_t corpus_size, std::size_t i,
                           std::size_t window, Rng& rng);
std::string adjacent_negative(std::span<const std::string> corpus,
                              std::size_t i, std::size_t window, Rng& rng);

// Drops the trailing round(f * n) words, f ~ U[lo, hi]; keeps and removes at
// least one word.
std::vector<std::string> truncate_negative(std::span<const std::string> words,
                                           Rng& rng, FractionRange range = {});

// Permutes max(2, round(f * n)) randomly chosen positions, f ~ U[lo, hi].
std::vector<std::string> swap_negative(std::span<const std::string> words,
                                       Rng& rng, FractionRange range = {});

// Half-away-from-zero rounding of f * n.
std::size_t round_count(double f, std::size_t n);

// One positive and one target-side negative per input pair. A held-out
// validation split of whole origins is taken, sized min(500, 10% of all
// examples) rounded down to an even count.
LabeledPairSet build_training_set(std::span<const SentencePair> positives,
                                  const CorruptionSpec& spec);

// TSV `src<TAB>tgt`.
std::vector<SentencePair> read_sentence_pairs(const std::filesystem::path& path);

// TSV `src<TAB>tgt<TAB>label<TAB>strategy`, label is `1` (positive) or `0`.
void write_labeled_pairs(std::span<const LabeledPair> pairs,
                         const std::filesystem::path& path);
std::vector<LabeledPair> read_labeled_pairs(const std::filesystem::path& path);

// `out.tsv` -> `out.val.tsv`.
std::filesystem::path validation_path(const std::filesystem::path& train_path);

}  // namespace pcf
