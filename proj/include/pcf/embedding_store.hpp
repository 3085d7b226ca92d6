#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pcf/error.hpp"

namespace pcf {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RowMatrixXf = RowMatrix<float>;
using RowMatrixXd = RowMatrix<double>;

// Norms below this are treated as zero vectors.
inline constexpr double kZeroNorm = 1e-8;

// Dense table of sentence embeddings, one row per sentence. Storage is
// shared between copies and never mutated after construction.
class EmbeddingMatrix {
 public:
  using Storage = RowMatrixXf;

  // Throws MalformedFile if the matrix is empty, DimMismatch if a
  // normalized matrix carries rows that are neither unit nor indexed zero.
  explicit EmbeddingMatrix(Storage data, bool normalized = false,
                           std::vector<Index> zero_rows = {});

  Index rows() const { return data_->rows(); }
  Index dim() const { return data_->cols(); }
  bool normalized() const { return normalized_; }
  const Storage& data() const { return *data_; }
  std::span<const Index> zero_rows() const { return zero_rows_; }

  auto row(Index i) const { return data_->row(i); }

 private:
  std::shared_ptr<const Storage> data_;
  bool normalized_;
  std::vector<Index> zero_rows_;
};

// Reads a headered ("EMB1") file, or raw little-endian float32 rows when
// `dim` is supplied and the file has no header.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                std::optional<Index> dim = std::nullopt);

// Always writes the headered format.
void write_embeddings(const EmbeddingMatrix& matrix,
                      const std::filesystem::path& path);

// Scales each non-zero row to unit L2 norm; zero rows stay zero and are
// indexed. Norms are computed in double precision.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix& matrix);

// Fixed left-to-right double accumulation. Because each term is a single
// product, dot(a, b) == dot(b, a) bitwise.
template <typename A, typename B>
double dot_canonical(const Eigen::MatrixBase<A>& a,
                     const Eigen::MatrixBase<B>& b) {
  double sum = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    sum += static_cast<double>(a.coeff(i)) * static_cast<double>(b.coeff(i));
  }
  return sum;
}

template <typename A>
double norm_canonical(const Eigen::MatrixBase<A>& a) {
  return std::sqrt(dot_canonical(a, a));
}

// Cosine similarity with double accumulation; 0 when either side is a zero
// vector. Throws DimMismatch on size mismatch.
template <typename A, typename B>
double cosine(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
  if (u.size() != v.size()) {
    throw Error(Errc::DimMismatch, "cosine of vectors with sizes " +
                                       std::to_string(u.size()) + " and " +
                                       std::to_string(v.size()));
  }
  const double nu = norm_canonical(u);
  const double nv = norm_canonical(v);
  if (nu < kZeroNorm || nv < kZeroNorm) return 0.0;
  return dot_canonical(u, v) / (nu * nv);
}

}  // namespace pcf
