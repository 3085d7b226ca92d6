#include "pcf/margin_scorer.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "pcf/parallel.hpp"

namespace pcf {
namespace {

constexpr Index kQueryBlock = 256;
constexpr std::size_t kPairBlock = 4096;

EmbeddingMatrix ensure_normalized(const EmbeddingMatrix& m) {
  return m.normalized() ? m : normalize_rows(m);
}

std::vector<double> row_norms(const EmbeddingMatrix& m) {
  std::vector<double> norms(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) norms[i] = norm_canonical(m.row(i));
  return norms;
}

struct NormRange {
  double lo = 1.0;
  double hi = 1.0;
};

NormRange nonzero_range(const std::vector<double>& norms) {
  NormRange r{std::numeric_limits<double>::max(), 0.0};
  for (double n : norms) {
    if (n < kZeroNorm) continue;
    r.lo = std::min(r.lo, n);
    r.hi = std::max(r.hi, n);
  }
  if (r.hi == 0.0) return {};
  return r;
}

// The caller's rows, their double-precision norms, and float unit rows for
// the candidate GEMM.
struct Side {
  const EmbeddingMatrix& raw;
  EmbeddingMatrix unit;
  std::vector<double> norms;

  explicit Side(const EmbeddingMatrix& m)
      : raw(m), unit(ensure_normalized(m)), norms(row_norms(m)) {}
};

double exact_cosine(const Side& a, Index i, const Side& b, Index j) {
  if (a.norms[i] < kZeroNorm || b.norms[j] < kZeroNorm) return 0.0;
  return dot_canonical(a.raw.row(i), b.raw.row(j)) / (a.norms[i] * b.norms[j]);
}

bool ranks_before(const Neighbor& a, const Neighbor& b) {
  return a.similarity > b.similarity ||
         (a.similarity == b.similarity && a.index < b.index);
}

// k-th largest of values[0..n), k <= n.
float kth_largest(const float* values, Index n, Index k, std::vector<float>& top) {
  top.assign(values, values + k);
  std::sort(top.begin(), top.end(), std::greater<>());
  for (Index j = k; j < n; ++j) {
    const float v = values[j];
    if (v <= top.back()) continue;
    auto it = std::upper_bound(top.begin(), top.end(), v, std::greater<>());
    top.insert(it, v);
    top.pop_back();
  }
  return top.back();
}

// Neighbors for the listed query rows.
NeighborList search(const Side& queries, const std::vector<Index>& rows,
                    const Side& pool, Index k, unsigned threads) {
  const Index m = pool.raw.rows();
  const Index kk = std::min(k, m);

  // |gemm - exact| <= gamma_D * |q||p| + ||q||p| - 1| + 2u for every entry,
  // the last term covering the rounding of the unit rows. A row of the exact
  // top-k therefore has an approximate score no lower than the approximate
  // k-th largest minus twice that bound.
  const double u = std::numeric_limits<float>::epsilon() / 2;
  const double d = static_cast<double>(queries.raw.dim()) + 2;
  const double gamma = d * u / (1 - d * u);
  const NormRange qr = nonzero_range(row_norms(queries.unit));
  const NormRange pr = nonzero_range(row_norms(pool.unit));
  const double hi = qr.hi * pr.hi;
  const double lo = qr.lo * pr.lo;
  const double bound =
      gamma * hi + std::max(hi - 1.0, 1.0 - lo) + 4 * u + 1e-12;
  const double slack = 2 * bound;

  NeighborList out(static_cast<Index>(rows.size()), kk);
  const auto pool_t = pool.unit.data().transpose();

  parallel_for_blocks(
      rows.size(), kQueryBlock, threads, [&](std::size_t b, std::size_t e) {
        const Index count = static_cast<Index>(e - b);
        RowMatrixXf block(count, queries.raw.dim());
        for (Index r = 0; r < count; ++r) {
          block.row(r) = queries.unit.row(rows[b + r]);
        }
        RowMatrixXf sims(count, m);
        sims.noalias() = block * pool_t;

        std::vector<float> top;
        std::vector<Neighbor> candidates;
        for (Index r = 0; r < count; ++r) {
          const Index q = rows[b + r];
          auto dst = out.of(static_cast<Index>(b) + r);
          if (queries.norms[q] < kZeroNorm) {
            for (Index i = 0; i < kk; ++i) dst[i] = {i, 0.0};
            continue;
          }
          const float* s = sims.row(r).data();
          const double threshold = kth_largest(s, m, kk, top) - slack;
          candidates.clear();
          for (Index j = 0; j < m; ++j) {
            if (s[j] >= threshold) {
              candidates.push_back(
                  {j, exact_cosine(queries, q, pool, j)});
            }
          }
          std::partial_sort(candidates.begin(), candidates.begin() + kk,
                            candidates.end(), ranks_before);
          std::copy_n(candidates.begin(), kk, dst.begin());
        }
      });
  return out;
}

void check_dims(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.dim() != b.dim()) {
    throw Error(Errc::DimMismatch, "embedding dims " + std::to_string(a.dim()) +
                                       " and " + std::to_string(b.dim()));
  }
}

double mean_similarity(std::span<const Neighbor> neighbors) {
  double sum = 0.0;
  for (const auto& n : neighbors) sum += n.similarity;
  return sum / static_cast<double>(neighbors.size());
}

double mean(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

// Neighborhood mean for every distinct row in `wanted`, keyed by row.
std::vector<double> neighborhood_means(const Side& queries,
                                       std::vector<Index> wanted,
                                       const Side& pool, Index k,
                                       unsigned threads) {
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  const NeighborList nn = search(queries, wanted, pool, k, threads);
  std::vector<double> means(static_cast<std::size_t>(queries.raw.rows()), 0.0);
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    means[wanted[i]] = mean_similarity(nn.of(static_cast<Index>(i)));
  }
  return means;
}

}  // namespace

MarginVariant parse_margin_variant(std::string_view name) {
  if (name == "ratio") return MarginVariant::Ratio;
  if (name == "distance") return MarginVariant::Distance;
  if (name == "absolute") return MarginVariant::Absolute;
  throw Error(Errc::UsageError, "unknown margin variant '" + std::string(name) + "'");
}

std::string_view margin_variant_name(MarginVariant variant) {
  switch (variant) {
    case MarginVariant::Ratio: return "ratio";
    case MarginVariant::Distance: return "distance";
    case MarginVariant::Absolute: return "absolute";
  }
  return "ratio";
}

NeighborList knn(const EmbeddingMatrix& queries, const EmbeddingMatrix& pool,
                 Index k, unsigned threads) {
  check_dims(queries, pool);
  if (k < 1) throw Error(Errc::EmptyNeighborhood, "k must be at least 1");
  std::vector<Index> rows(static_cast<std::size_t>(queries.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  return search(Side(queries), rows, Side(pool), k, threads);
}

double margin_score(double xy_cos, std::span<const double> nn_x,
                    std::span<const double> nn_y, const MarginConfig& config) {
  if (nn_x.empty() || nn_y.empty()) {
    throw Error(Errc::EmptyNeighborhood, "margin needs non-empty neighborhoods");
  }
  const double b = 0.5 * (mean(nn_x) + mean(nn_y));
  switch (config.variant) {
    case MarginVariant::Ratio: return xy_cos / (b + config.epsilon);
    case MarginVariant::Distance: return xy_cos - b;
    case MarginVariant::Absolute: return xy_cos;
  }
  return xy_cos;
}

ScoreTable score_corpus(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt,
                        std::span<const IndexPair> pairs,
                        const MarginConfig& config) {
  check_dims(src, tgt);
  if (config.k < 1) throw Error(Errc::EmptyNeighborhood, "k must be at least 1");
  std::vector<Index> src_rows;
  std::vector<Index> tgt_rows;
  src_rows.reserve(pairs.size());
  tgt_rows.reserve(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [s, t] = pairs[p];
    if (s >= static_cast<std::size_t>(src.rows()) ||
        t >= static_cast<std::size_t>(tgt.rows())) {
      throw Error(Errc::IndexOutOfRange,
                  "pair " + std::to_string(p) + " = (" + std::to_string(s) +
                      ", " + std::to_string(t) + ") outside " +
                      std::to_string(src.rows()) + "x" +
                      std::to_string(tgt.rows()));
    }
    src_rows.push_back(static_cast<Index>(s));
    tgt_rows.push_back(static_cast<Index>(t));
  }
  if (pairs.empty()) return {};

  const Side x(src);
  const Side y(tgt);
  const auto x_means = neighborhood_means(x, src_rows, y, config.k, config.threads);
  const auto y_means = neighborhood_means(y, tgt_rows, x, config.k, config.threads);

  ScoreTable table(pairs.size());
  parallel_for_blocks(
      pairs.size(), kPairBlock, config.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
          const Index s = src_rows[p];
          const Index t = tgt_rows[p];
          const double xy = exact_cosine(x, s, y, t);
          const double nx[] = {x_means[s]};
          const double ny[] = {y_means[t]};
          table[p].score = margin_score(xy, nx, ny, config);
        }
      });
  return table;
}

}  // namespace pcf
