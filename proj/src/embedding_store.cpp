#include "pcf/embedding_store.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace pcf {
namespace {

constexpr std::array<char, 4> kMagic = {'E', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 12;
constexpr double kUnitTolerance = 1e-4;

static_assert(std::endian::native == std::endian::little,
              "embedding files are little-endian; big-endian hosts need "
              "byte swapping");

std::uint32_t read_u32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::IoError, "read failed: " + path.string());
  return bytes;
}

EmbeddingMatrix from_payload(const char* payload, std::size_t bytes, Index dim,
                             const std::filesystem::path& path) {
  const std::size_t row_bytes = 4 * static_cast<std::size_t>(dim);
  if (bytes == 0 || bytes % row_bytes != 0) {
    throw Error(Errc::MalformedFile,
                path.string() + ": payload of " + std::to_string(bytes) +
                    " bytes is not a positive multiple of " +
                    std::to_string(row_bytes));
  }
  RowMatrixXf data(static_cast<Index>(bytes / row_bytes), dim);
  std::memcpy(data.data(), payload, bytes);
  return EmbeddingMatrix(std::move(data));
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(Storage data, bool normalized,
                                 std::vector<Index> zero_rows)
    : normalized_(normalized), zero_rows_(std::move(zero_rows)) {
  if (data.rows() < 1 || data.cols() < 1) {
    throw Error(Errc::MalformedFile, "embedding matrix must be at least 1x1");
  }
  if (normalized_) {
    std::size_t z = 0;
    for (Index i = 0; i < data.rows(); ++i) {
      const bool indexed = z < zero_rows_.size() && zero_rows_[z] == i;
      const double n = norm_canonical(data.row(i));
      if (indexed) {
        ++z;
        if (n >= kZeroNorm) {
          throw Error(Errc::DimMismatch,
                      "row " + std::to_string(i) + " indexed as zero");
        }
      } else if (std::abs(n - 1.0) > kUnitTolerance) {
        throw Error(Errc::DimMismatch,
                    "row " + std::to_string(i) + " is not unit length");
      }
    }
  }
  data_ = std::make_shared<const Storage>(std::move(data));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                std::optional<Index> dim) {
  const std::vector<char> bytes = slurp(path);
  if (dim && *dim < 1) {
    throw Error(Errc::MissingDim, "dim must be positive");
  }
  const bool headered =
      bytes.size() >= kHeaderBytes &&
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) == 0;
  if (!headered) {
    if (!dim) {
      throw Error(Errc::MissingDim,
                  path.string() + " has no header and no dim was given");
    }
    return from_payload(bytes.data(), bytes.size(), *dim, path);
  }

  const std::uint32_t n = read_u32(bytes.data() + 4);
  const std::uint32_t d = read_u32(bytes.data() + 8);
  if (dim && *dim != static_cast<Index>(d)) {
    throw Error(Errc::DimMismatch, path.string() + ": header dim " +
                                       std::to_string(d) + " but " +
                                       std::to_string(*dim) + " requested");
  }
  if (n == 0 || d == 0) {
    throw Error(Errc::MalformedFile, path.string() + ": empty header shape");
  }
  const std::size_t payload = bytes.size() - kHeaderBytes;
  if (payload != std::size_t{4} * n * d) {
    throw Error(Errc::MalformedFile,
                path.string() + ": payload size disagrees with header");
  }
  return from_payload(bytes.data() + kHeaderBytes, payload, d, path);
}

void write_embeddings(const EmbeddingMatrix& matrix,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  const auto n = static_cast<std::uint32_t>(matrix.rows());
  const auto d = static_cast<std::uint32_t>(matrix.dim());
  out.write(kMagic.data(), kMagic.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&d), sizeof d);
  out.write(reinterpret_cast<const char*>(matrix.data().data()),
            static_cast<std::streamsize>(sizeof(float) * n * d));
  out.flush();
  if (!out) throw Error(Errc::IoError, "write failed: " + path.string());
}

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& matrix) {
  RowMatrixXf out(matrix.rows(), matrix.dim());
  std::vector<Index> zeros;
  for (Index i = 0; i < matrix.rows(); ++i) {
    const auto src = matrix.row(i);
    const double n = norm_canonical(src);
    if (n < kZeroNorm) {
      out.row(i).setZero();
      zeros.push_back(i);
      continue;
    }
    for (Index j = 0; j < matrix.dim(); ++j) {
      out(i, j) = static_cast<float>(static_cast<double>(src(j)) / n);
    }
  }
  return EmbeddingMatrix(std::move(out), true, std::move(zeros));
}

}  // namespace pcf
