#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "pcf/embedding_store.hpp"
#include "pcf/error.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace pcf;
using pcf::testkit::code_of;

namespace {

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "pcf_embedding_test";
  fs::create_directories(dir);
  return dir / name;
}

void write_raw(const fs::path& path, const std::vector<float>& values, std::size_t extra = 0) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
  for (std::size_t i = 0; i < extra; ++i) out.put('\0');
}

}  // namespace

TEST(EmbeddingStore, HeaderedRoundTrip) {
  RowMatrixXf m(2, 2);
  m << 1, 0, 0, 1;
  const auto path = temp_file("identity.emb");
  write_embeddings(EmbeddingMatrix(m), path);
  const EmbeddingMatrix loaded = load_embeddings(path);
  EXPECT_EQ(loaded.rows(), 2);
  EXPECT_EQ(loaded.dim(), 2);
  EXPECT_FALSE(loaded.normalized());
  EXPECT_EQ(loaded.data(), m);
}

TEST(EmbeddingStore, OneByOneFileSize) {
  RowMatrixXf m(1, 1);
  m << 0.5f;
  const auto path = temp_file("one.emb");
  write_embeddings(EmbeddingMatrix(m), path);
  EXPECT_EQ(fs::file_size(path), 12u + 4u);
}

TEST(EmbeddingStore, RawFormat) {
  const auto path = temp_file("raw24.bin");
  write_raw(path, {1, 2, 3, 4, 5, 6});
  const auto m = load_embeddings(path, 3);
  EXPECT_EQ(m.rows(), 2);
  EXPECT_EQ(m.dim(), 3);
  EXPECT_EQ(m.data()(1, 2), 6.0f);

  const auto bad = temp_file("raw25.bin");
  write_raw(bad, {1, 2, 3, 4, 5, 6}, 1);
  EXPECT_EQ(code_of([&] { load_embeddings(bad, 3); }), Errc::MalformedFile);
  EXPECT_EQ(code_of([&] { load_embeddings(path); }), Errc::MissingDim);
}

TEST(EmbeddingStore, HeaderDimMismatch) {
  const auto path = temp_file("hdr.emb");
  write_embeddings(EmbeddingMatrix(RowMatrixXf::Ones(3, 4)), path);
  EXPECT_EQ(code_of([&] { load_embeddings(path, 5); }), Errc::DimMismatch);
  EXPECT_EQ(load_embeddings(path, 4).rows(), 3);
}

TEST(EmbeddingStore, TruncatedHeaderedPayload) {
  const auto path = temp_file("trunc.emb");
  write_embeddings(EmbeddingMatrix(RowMatrixXf::Ones(3, 4)), path);
  fs::resize_file(path, fs::file_size(path) - 4);
  EXPECT_EQ(code_of([&] { load_embeddings(path); }), Errc::MalformedFile);
}

TEST(EmbeddingStore, UnwritablePath) {
  EXPECT_EQ(code_of([] {
              write_embeddings(EmbeddingMatrix(RowMatrixXf::Ones(1, 1)),
                               "/nonexistent-dir/x/y.emb");
            }),
            Errc::IoError);
  EXPECT_EQ(code_of([] { load_embeddings("/nonexistent-dir/y.emb"); }), Errc::IoError);
}

TEST(EmbeddingStore, RoundTripRandomIsBitExact) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const RowMatrixXf m = testkit::gaussian_rows(1 + trial * 7, 1 + trial * 3, rng);
    const auto path = temp_file("rand.emb");
    write_embeddings(EmbeddingMatrix(m), path);
    const auto back = load_embeddings(path);
    ASSERT_EQ(back.data().size(), m.size());
    EXPECT_EQ(std::memcmp(back.data().data(), m.data(), sizeof(float) * m.size()), 0);
  }
}

TEST(NormalizeRows, PythagoreanRow) {
  RowMatrixXf m(1, 2);
  m << 3, 4;
  const auto n = normalize_rows(EmbeddingMatrix(m));
  EXPECT_TRUE(n.normalized());
  EXPECT_FLOAT_EQ(n.data()(0, 0), 0.6f);
  EXPECT_FLOAT_EQ(n.data()(0, 1), 0.8f);
  EXPECT_TRUE(n.zero_rows().empty());
}

TEST(NormalizeRows, ZeroRowIsKeptAndIndexed) {
  RowMatrixXf m(3, 2);
  m << 0, 0, 1, 1, 0, 0;
  const auto n = normalize_rows(EmbeddingMatrix(m));
  ASSERT_EQ(n.zero_rows().size(), 2u);
  EXPECT_EQ(n.zero_rows()[0], 0);
  EXPECT_EQ(n.zero_rows()[1], 2);
  EXPECT_EQ(n.data().row(0).norm(), 0.0f);
}

TEST(NormalizeRows, Idempotent) {
  std::mt19937_64 rng(11);
  const auto once = normalize_rows(EmbeddingMatrix(testkit::gaussian_rows(50, 64, rng)));
  const auto twice = normalize_rows(once);
  EXPECT_LE((once.data() - twice.data()).cwiseAbs().maxCoeff(), 1e-7f);
  for (Index i = 0; i < once.rows(); ++i) {
    EXPECT_NEAR(norm_canonical(once.row(i)), 1.0, 1e-6);
  }
}

TEST(EmbeddingMatrix, RejectsEmptyAndBadNormalizedClaims) {
  EXPECT_EQ(code_of([] { EmbeddingMatrix(RowMatrixXf(0, 3)); }), Errc::MalformedFile);
  EXPECT_EQ(code_of([] { EmbeddingMatrix(RowMatrixXf::Ones(2, 2), true); }), Errc::DimMismatch);
}

TEST(Cosine, Examples) {
  Eigen::Vector2f a(1, 0), b(0, 1), c(3, 4), d(4, 3);
  EXPECT_EQ(cosine(a, b), 0.0);
  EXPECT_EQ(cosine(a, a), 1.0);
  EXPECT_NEAR(cosine(c, d), 24.0 / 25.0, 1e-15);
  EXPECT_EQ(cosine(a, Eigen::Vector2f::Zero()), 0.0);
  EXPECT_EQ(code_of([&] { cosine(a, Eigen::Vector3f(1, 2, 3)); }), Errc::DimMismatch);
}

TEST(Cosine, SymmetryScaleInvarianceAndBound) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int t = 0; t < 200; ++t) {
    const RowMatrixXf m = testkit::gaussian_rows(2, 1 + t % 64, rng);
    const auto u = m.row(0);
    const auto v = m.row(1);
    EXPECT_EQ(cosine(u, v), cosine(v, u));
    const Eigen::RowVectorXd scaled = u.cast<double>() * scale(rng);
    EXPECT_NEAR(cosine(scaled, v), cosine(u, v), 1e-6);
    EXPECT_LE(std::abs(cosine(u, v)), 1.0 + 1e-6);
  }
}
