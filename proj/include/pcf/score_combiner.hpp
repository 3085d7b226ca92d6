#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcf/score_table.hpp"

namespace pcf {

enum class Normalization { None, MinMax };

Normalization parse_normalization(std::string_view name);
std::string_view normalization_name(Normalization n);

struct CombineConfig {
  Normalization normalization = Normalization::None;
  double sentinel = -1e30;
  std::size_t budget_tokens = 5'000'000;
};

struct SelectionReport {
  std::vector<std::size_t> kept_indices;  // best first
  std::size_t cumulative_tokens = 0;
  double cutoff_score = std::numeric_limits<double>::quiet_NaN();
  std::size_t rejected_by_langid = 0;
};

// (s - min) / (max - min) over the non-rejected entries; rejected entries
// are left untouched. Throws DegenerateRange on a flat or too-small table.
ScoreTable minmax_normalize(const ScoreTable& scores);

// Unweighted sum of the two margin tables and the classifier table. Entries
// whose mask byte is 0, or that any component already rejected, get the
// sentinel score and the rejected flag, and take no part in min-max
// statistics. An empty mask means "all pass".
ScoreTable combine(const ScoreTable& base, const ScoreTable& custom,
                   const ScoreTable& cls, std::span<const std::uint8_t> mask,
                   const CombineConfig& config);

// Best-first selection of non-rejected pairs while the running English token
// count is below the budget; the pair that crosses the budget is kept.
SelectionReport select_by_budget(const ScoreTable& scores,
                                 std::span<const std::size_t> english_tokens,
                                 std::size_t budget);

std::vector<std::size_t> count_english_tokens(std::span<const std::string> sentences);

// Pair indices sorted best first; ties keep the lower index first.
std::vector<std::size_t> rank_pairs(const ScoreTable& scores);

// `score<TAB>src<TAB>tgt`, every pair, best first.
void write_submission(const ScoreTable& scores,
                      std::span<const std::string> src_sentences,
                      std::span<const std::string> tgt_sentences,
                      const std::filesystem::path& path);

}  // namespace pcf
