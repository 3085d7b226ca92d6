#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "pcf/embedding_store.hpp"
#include "pcf/score_table.hpp"

namespace pcf {

struct Neighbor {
  Index index = 0;
  double similarity = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// k nearest pool rows per query row, most similar first.
class NeighborList {
 public:
  NeighborList(Index queries, Index k)
      : k_(k), entries_(static_cast<std::size_t>(queries * k)) {}

  Index queries() const { return k_ == 0 ? 0 : Index(entries_.size()) / k_; }
  Index k() const { return k_; }

  std::span<const Neighbor> of(Index query) const {
    return {entries_.data() + query * k_, static_cast<std::size_t>(k_)};
  }
  std::span<Neighbor> of(Index query) {
    return {entries_.data() + query * k_, static_cast<std::size_t>(k_)};
  }

  friend bool operator==(const NeighborList&, const NeighborList&) = default;

 private:
  Index k_;
  std::vector<Neighbor> entries_;
};

enum class MarginVariant { Ratio, Distance, Absolute };

MarginVariant parse_margin_variant(std::string_view name);
std::string_view margin_variant_name(MarginVariant variant);

struct MarginConfig {
  Index k = 4;
  MarginVariant variant = MarginVariant::Ratio;
  double epsilon = 1e-9;
  unsigned threads = 0;
};

// Exact cosine k-NN. Candidates come from a float GEMM and are then
// re-scored with double accumulation, so the result depends only on the
// exact similarities (ties go to the lower pool index) and never on the
// blocking or thread count. Inputs are normalized internally if needed.
NeighborList knn(const EmbeddingMatrix& queries, const EmbeddingMatrix& pool,
                 Index k, unsigned threads = 0);

// margin(cos(x,y), b) with b the mean of both neighborhood means.
double margin_score(double xy_cos, std::span<const double> nn_x,
                    std::span<const double> nn_y, const MarginConfig& config);

// Margin score per candidate pair. The neighborhood of a source row is
// searched in the whole target matrix and vice versa.
ScoreTable score_corpus(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt,
                        std::span<const IndexPair> pairs,
                        const MarginConfig& config);

}  // namespace pcf
