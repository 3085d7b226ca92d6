#pragma once

// Shared generators and brute-force oracles for the unit and acceptance
// suites. Oracles deliberately avoid the library's own kernels.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "pcf/embedding_store.hpp"
#include "pcf/error.hpp"
#include "pcf/negative_sampler.hpp"
#include "pcf/pair_classifier.hpp"
#include "pcf/score_table.hpp"

namespace pcf::testkit {

// The error code thrown by `fn`, or a test failure if it returns normally.
template <typename Fn>
Errc code_of(const Fn& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::UsageError;
}

inline RowMatrixXf gaussian_rows(Index rows, Index dim, std::mt19937_64& rng) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  RowMatrixXf m(rows, dim);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Overwrites a random share of rows with copies of other rows so that exact
// similarity ties appear.
inline void duplicate_some_rows(RowMatrixXf& m, std::mt19937_64& rng) {
  if (m.rows() < 2) return;
  std::uniform_int_distribution<Index> pick(0, m.rows() - 1);
  const Index copies = std::max<Index>(1, m.rows() / 4);
  for (Index c = 0; c < copies; ++c) {
    const Index from = pick(rng);
    const Index to = pick(rng);
    m.row(to) = m.row(from);
  }
}

inline double oracle_dot(const float* a, const float* b, Index d) {
  double s = 0.0;
  for (Index i = 0; i < d; ++i) s += double(a[i]) * double(b[i]);
  return s;
}

inline double oracle_cosine(const float* a, const float* b, Index d) {
  const double na = std::sqrt(oracle_dot(a, a, d));
  const double nb = std::sqrt(oracle_dot(b, b, d));
  if (na < 1e-8 || nb < 1e-8) return 0.0;
  return oracle_dot(a, b, d) / (na * nb);
}

struct OracleNeighbor {
  Index index;
  double similarity;
};

// Full sort of every pool row per query.
inline std::vector<std::vector<OracleNeighbor>> oracle_knn(const RowMatrixXf& q,
                                                           const RowMatrixXf& p,
                                                           Index k) {
  std::vector<std::vector<OracleNeighbor>> out(static_cast<std::size_t>(q.rows()));
  for (Index i = 0; i < q.rows(); ++i) {
    std::vector<OracleNeighbor> all;
    for (Index j = 0; j < p.rows(); ++j) {
      all.push_back({j, oracle_cosine(q.row(i).data(), p.row(j).data(), q.cols())});
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return a.index < b.index;
    });
    all.resize(static_cast<std::size_t>(std::min(k, p.rows())));
    out[i] = std::move(all);
  }
  return out;
}

// Margin scores recomputed from scratch: full-sort neighbourhoods, plain
// means, direct formula.
inline std::vector<double> oracle_margin(const RowMatrixXf& x, const RowMatrixXf& y,
                                         const std::vector<IndexPair>& pairs, Index k,
                                         const std::string& variant, double eps = 1e-9) {
  const auto nx = oracle_knn(x, y, k);
  const auto ny = oracle_knn(y, x, k);
  auto mean = [](const std::vector<OracleNeighbor>& v) {
    double s = 0.0;
    for (const auto& n : v) s += n.similarity;
    return s / double(v.size());
  };
  std::vector<double> out;
  for (const auto& [s, t] : pairs) {
    const double c = oracle_cosine(x.row(s).data(), y.row(t).data(), x.cols());
    const double b = 0.5 * (mean(nx[s]) + mean(ny[t]));
    out.push_back(variant == "ratio" ? c / (b + eps) : variant == "distance" ? c - b : c);
  }
  return out;
}

// Full sort + linear scan, written independently of select_by_budget.
struct OracleSelection {
  std::vector<std::size_t> kept;
  std::size_t tokens = 0;
};

inline OracleSelection oracle_select(const ScoreTable& s, const std::vector<std::size_t>& tokens,
                                     std::size_t budget) {
  std::vector<std::pair<double, std::size_t>> live;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s[i].rejected) live.emplace_back(s[i].score, i);
  }
  std::sort(live.begin(), live.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  OracleSelection out;
  for (const auto& [score, i] : live) {
    if (out.tokens >= budget) break;
    out.kept.push_back(i);
    out.tokens += tokens[i];
  }
  return out;
}

// Two synthetic languages with disjoint alphabets. "Words" are random
// strings over each alphabet.
struct SyntheticLanguage {
  std::string code;
  std::vector<std::string> alphabet;  // UTF-8 characters

  std::string word(std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> len(2, 7);
    std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1);
    std::string w;
    for (std::size_t n = len(rng); n > 0; --n) w += alphabet[ch(rng)];
    return w;
  }

  std::string sentence(std::mt19937_64& rng, std::size_t min_words = 4,
                       std::size_t max_words = 14) const {
    std::uniform_int_distribution<std::size_t> words(min_words, max_words);
    std::string s;
    for (std::size_t n = words(rng); n > 0; --n) {
      if (!s.empty()) s += ' ';
      s += word(rng);
    }
    return s;
  }

  std::vector<std::string> corpus(std::size_t n, std::mt19937_64& rng) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(sentence(rng));
    return out;
  }
};

// A Greek-script source language and a Latin-script "English".
inline SyntheticLanguage greek_language() {
  SyntheticLanguage l{"xx", {}};
  for (const char* c : {"α", "β", "γ", "δ", "ε", "ζ", "η", "θ", "ι", "κ", "λ", "μ",
                        "ν", "ξ", "ο", "π", "ρ", "σ", "τ", "υ", "φ", "χ", "ψ", "ω"}) {
    l.alphabet.emplace_back(c);
  }
  return l;
}

inline SyntheticLanguage latin_language() {
  SyntheticLanguage l{"en", {}};
  for (char c = 'a'; c <= 'z'; ++c) l.alphabet.emplace_back(1, c);
  return l;
}

// Random orthogonal matrix from the QR factorization of a Gaussian matrix.
Eigen::MatrixXd random_rotation(Index dim, std::mt19937_64& rng);

// Positives: v = Q u + noise for a fixed rotation Q; negatives: v drawn
// independently. Balanced classes, labels interleaved.
EmbeddedPairs rotation_pairs(Index n, const Eigen::MatrixXd& rotation, double noise,
                             std::mt19937_64& rng);

// Two "encoders" observing a shared latent sentence meaning. Pair i is a
// true translation iff is_true[i].
struct BilingualFixture {
  EmbeddingMatrix pretrained_src{RowMatrixXf::Zero(1, 1)};
  EmbeddingMatrix pretrained_tgt{RowMatrixXf::Zero(1, 1)};
  EmbeddingMatrix custom_src{RowMatrixXf::Zero(1, 1)};
  EmbeddingMatrix custom_tgt{RowMatrixXf::Zero(1, 1)};
  std::vector<bool> is_true;
};

struct BilingualParams {
  Index latent = 16;
  Index dim = 32;
  Index true_pairs = 1000;
  Index false_pairs = 1000;
  double pretrained_noise = 0.9;
  double custom_noise = 0.9;
};

// Encoders are fixed by `encoder_seed` so that a classifier trained on one
// draw applies to another; sentences come from `rng`.
BilingualFixture bilingual_fixture(const BilingualParams& params, std::uint64_t encoder_seed,
                                   std::mt19937_64& rng);

// Labeled pretrained-space pairs (true vs mismatched) for classifier training.
EmbeddedPairs bilingual_training_pairs(const BilingualParams& params,
                                       std::uint64_t encoder_seed, Index n,
                                       std::mt19937_64& rng);

// Fraction of true pairs among the `top` best-scored pairs.
double precision_at(const ScoreTable& scores, const std::vector<bool>& is_true, std::size_t top);

// Writes a complete pipeline input set plus manifest under `dir`; returns
// the manifest path.
std::filesystem::path write_pipeline_fixture(const std::filesystem::path& dir,
                                             std::uint64_t seed);

}  // namespace pcf::testkit
