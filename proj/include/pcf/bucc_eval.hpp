#pragma once

#include <Eigen/Core>

#include <string>

#include "pcf/embedding_store.hpp"

namespace pcf {

using SimilarityMatrix = RowMatrixXd;

// S(i, j) = cosine(src_i, tgt_j) for an aligned development set.
SimilarityMatrix similarity_matrix(const EmbeddingMatrix& src,
                                   const EmbeddingMatrix& tgt);

// Mean of source->target and target->source top-1 retrieval accuracy.
// Ties in an argmax go to the lowest index.
template <typename Derived>
double bucc_accuracy(const Eigen::MatrixBase<Derived>& s) {
  const Index n = s.rows();
  if (n == 0 || s.cols() == 0) {
    throw Error(Errc::EmptyMatrix, "similarity matrix is empty");
  }
  if (s.cols() != n) {
    throw Error(Errc::DimMismatch, "similarity matrix must be square");
  }
  Index hits = 0;
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    for (Index j = 1; j < n; ++j) {
      if (s(i, j) > s(i, best)) best = j;
    }
    hits += best == i;
  }
  for (Index j = 0; j < n; ++j) {
    Index best = 0;
    for (Index i = 1; i < n; ++i) {
      if (s(i, j) > s(best, j)) best = i;
    }
    hits += best == j;
  }
  return static_cast<double>(hits) / static_cast<double>(2 * n);
}

struct BuccOptions {
  // Above this many rows the matrix is never materialized.
  Index materialize_cap = 20000;
  unsigned threads = 0;
};

// Accuracy straight from embeddings; streams row blocks for large n and
// gives the same answer as bucc_accuracy(similarity_matrix(src, tgt)).
double bucc_accuracy(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt,
                     const BuccOptions& options = {});

}  // namespace pcf
