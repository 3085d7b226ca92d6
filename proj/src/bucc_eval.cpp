#include "pcf/bucc_eval.hpp"

#include <mutex>
#include <vector>

#include "pcf/parallel.hpp"

namespace pcf {
namespace {

// Both the materialized and streaming paths use the same row blocks so the
// GEMM produces identical entries in either case.
constexpr Index kBlockRows = 512;

void check_aligned(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt) {
  if (src.rows() != tgt.rows()) {
    throw Error(Errc::RowCountMismatch,
                "aligned sets need equal row counts, got " +
                    std::to_string(src.rows()) + " and " +
                    std::to_string(tgt.rows()));
  }
  if (src.dim() != tgt.dim()) {
    throw Error(Errc::DimMismatch, "embedding dims differ");
  }
}

RowMatrixXd unit_rows(const EmbeddingMatrix& m) {
  RowMatrixXd out = m.data().cast<double>();
  for (Index i = 0; i < out.rows(); ++i) {
    const double n = norm_canonical(m.row(i));
    if (n < kZeroNorm) {
      out.row(i).setZero();
    } else {
      out.row(i) /= n;
    }
  }
  return out;
}

template <typename Body>
void for_each_block(const RowMatrixXd& x, const RowMatrixXd& y,
                    unsigned threads, Body&& body) {
  const auto yt = y.transpose();
  const auto n = static_cast<std::size_t>(x.rows());
  parallel_for_blocks(n, kBlockRows, threads, [&](std::size_t b, std::size_t e) {
    const auto rows = static_cast<Index>(e - b);
    RowMatrixXd block(rows, y.rows());
    block.noalias() = x.middleRows(static_cast<Index>(b), rows) * yt;
    body(static_cast<Index>(b), block);
  });
}

struct ColumnBest {
  double value;
  Index row;
};

}  // namespace

SimilarityMatrix similarity_matrix(const EmbeddingMatrix& src,
                                   const EmbeddingMatrix& tgt) {
  check_aligned(src, tgt);
  const RowMatrixXd x = unit_rows(src);
  const RowMatrixXd y = unit_rows(tgt);
  SimilarityMatrix s(x.rows(), y.rows());
  for_each_block(x, y, 0, [&](Index begin, const RowMatrixXd& block) {
    s.middleRows(begin, block.rows()) = block;
  });
  return s;
}

double bucc_accuracy(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt,
                     const BuccOptions& options) {
  check_aligned(src, tgt);
  const Index n = src.rows();
  if (n <= options.materialize_cap) {
    return bucc_accuracy(similarity_matrix(src, tgt));
  }

  const RowMatrixXd x = unit_rows(src);
  const RowMatrixXd y = unit_rows(tgt);
  std::vector<char> row_hit(static_cast<std::size_t>(n), 0);
  std::vector<ColumnBest> columns(static_cast<std::size_t>(n), {0.0, -1});
  std::mutex merge;

  for_each_block(x, y, options.threads, [&](Index begin, const RowMatrixXd& block) {
    std::vector<ColumnBest> local(static_cast<std::size_t>(n), {0.0, -1});
    for (Index r = 0; r < block.rows(); ++r) {
      Index best = 0;
      for (Index j = 0; j < n; ++j) {
        const double v = block(r, j);
        if (v > block(r, best)) best = j;
        auto& c = local[j];
        if (c.row < 0 || v > c.value) c = {v, begin + r};
      }
      row_hit[begin + r] = best == begin + r;
    }
    // (value desc, row asc) is a total order, so merge order is irrelevant.
    std::lock_guard lock(merge);
    for (Index j = 0; j < n; ++j) {
      auto& g = columns[j];
      const auto& c = local[j];
      if (g.row < 0 || c.value > g.value ||
          (c.value == g.value && c.row < g.row)) {
        g = c;
      }
    }
  });

  Index hits = 0;
  for (Index i = 0; i < n; ++i) hits += row_hit[i];
  for (Index j = 0; j < n; ++j) hits += columns[j].row == j;
  return static_cast<double>(hits) / static_cast<double>(2 * n);
}

}  // namespace pcf
