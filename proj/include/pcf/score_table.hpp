#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pcf {

struct ScoreRecord {
  double score = 0.0;
  bool rejected = false;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

// Per-pair scores, indexed by pair index.
using ScoreTable = std::vector<ScoreRecord>;

// (source row, target row) candidate pairs; the pair index is the position.
using IndexPair = std::pair<std::size_t, std::size_t>;

// TSV `pair_index<TAB>score`, scores with 9 significant digits. Rejected
// rows carry a third column `rejected`.
void write_score_table(const ScoreTable& table,
                       const std::filesystem::path& path);
ScoreTable read_score_table(const std::filesystem::path& path);

// Formats a score the way score tables store it.
std::string format_score(double score);

// TSV `src_index<TAB>tgt_index`, one pair per line.
std::vector<IndexPair> read_index_pairs(const std::filesystem::path& path);
void write_index_pairs(const std::vector<IndexPair>& pairs,
                       const std::filesystem::path& path);

// Lines without their terminators (a trailing CR is dropped too). A final
// newline does not produce an extra empty line.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);

}  // namespace pcf
