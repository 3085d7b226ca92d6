#include "support.hpp"

#include <Eigen/QR>

#include <json.hpp>

#include "pcf/langid.hpp"
#include "pcf/score_combiner.hpp"

namespace pcf::testkit {
namespace {

Eigen::MatrixXd gaussian(Index rows, Index cols, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

struct Encoders {
  Eigen::MatrixXd pre_src, pre_tgt, cus_src, cus_tgt;
};

Encoders make_encoders(const BilingualParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double s = 1.0 / std::sqrt(double(p.latent));
  Encoders e;
  e.pre_src = gaussian(p.dim, p.latent, s, rng);
  e.pre_tgt = e.pre_src + gaussian(p.dim, p.latent, 0.3 * s, rng);
  e.cus_src = gaussian(p.dim, p.latent, s, rng);
  e.cus_tgt = e.cus_src + gaussian(p.dim, p.latent, 0.3 * s, rng);
  return e;
}

RowMatrixXf observe(const Eigen::MatrixXd& encoder, const Eigen::MatrixXd& latents,
                    double noise, std::mt19937_64& rng) {
  Eigen::MatrixXd x = encoder * latents + gaussian(encoder.rows(), latents.cols(), noise, rng);
  return x.transpose().cast<float>();
}

}  // namespace

Eigen::MatrixXd random_rotation(Index dim, std::mt19937_64& rng) {
  const Eigen::MatrixXd g = gaussian(dim, dim, 1.0, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  // Fix column signs so the distribution is uniform over O(n).
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

EmbeddedPairs rotation_pairs(Index n, const Eigen::MatrixXd& rotation, double noise,
                             std::mt19937_64& rng) {
  const Index d = rotation.rows();
  const double s = 1.0 / std::sqrt(double(d));
  EmbeddedPairs out;
  out.src = gaussian(d, n, s, rng);
  out.tgt.resize(d, n);
  out.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const bool positive = i % 2 == 0;
    out.labels[i] = positive ? 1 : 0;
    if (positive) {
      out.tgt.col(i) = rotation * out.src.col(i) + gaussian(d, 1, noise * s, rng);
    } else {
      out.tgt.col(i) = gaussian(d, 1, s, rng);
    }
  }
  return out;
}

BilingualFixture bilingual_fixture(const BilingualParams& p, std::uint64_t encoder_seed,
                                   std::mt19937_64& rng) {
  const Encoders e = make_encoders(p, encoder_seed);
  const Index n = p.true_pairs + p.false_pairs;
  std::vector<bool> is_true(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) is_true[i] = i < p.true_pairs;
  std::shuffle(is_true.begin(), is_true.end(), rng);

  const Eigen::MatrixXd src_latent = gaussian(p.latent, n, 1.0, rng);
  Eigen::MatrixXd tgt_latent = gaussian(p.latent, n, 1.0, rng);
  for (Index i = 0; i < n; ++i) {
    if (is_true[i]) tgt_latent.col(i) = src_latent.col(i);
  }
  BilingualFixture f;
  f.pretrained_src = EmbeddingMatrix(observe(e.pre_src, src_latent, p.pretrained_noise, rng));
  f.pretrained_tgt = EmbeddingMatrix(observe(e.pre_tgt, tgt_latent, p.pretrained_noise, rng));
  f.custom_src = EmbeddingMatrix(observe(e.cus_src, src_latent, p.custom_noise, rng));
  f.custom_tgt = EmbeddingMatrix(observe(e.cus_tgt, tgt_latent, p.custom_noise, rng));
  f.is_true = std::move(is_true);
  return f;
}

EmbeddedPairs bilingual_training_pairs(const BilingualParams& p, std::uint64_t encoder_seed,
                                       Index n, std::mt19937_64& rng) {
  BilingualParams q = p;
  q.true_pairs = n / 2;
  q.false_pairs = n - n / 2;
  const BilingualFixture f = bilingual_fixture(q, encoder_seed, rng);
  EmbeddedPairs out;
  out.src = f.pretrained_src.data().cast<double>().transpose();
  out.tgt = f.pretrained_tgt.data().cast<double>().transpose();
  for (bool t : f.is_true) out.labels.push_back(t ? 1 : 0);
  return out;
}

double precision_at(const ScoreTable& scores, const std::vector<bool>& is_true,
                    std::size_t top) {
  const auto order = rank_pairs(scores);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < top && r < order.size(); ++r) hits += is_true[order[r]];
  return double(hits) / double(top);
}

std::filesystem::path write_pipeline_fixture(const std::filesystem::path& dir,
                                             std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::mt19937_64 rng(seed);
  BilingualParams params;
  params.dim = 16;
  params.latent = 8;
  params.true_pairs = 200;
  params.false_pairs = 100;
  params.pretrained_noise = 0.5;
  params.custom_noise = 0.5;
  const std::uint64_t encoder_seed = seed + 1;
  const BilingualFixture f = bilingual_fixture(params, encoder_seed, rng);
  write_embeddings(f.pretrained_src, dir / "pre_src.emb");
  write_embeddings(f.pretrained_tgt, dir / "pre_tgt.emb");
  write_embeddings(f.custom_src, dir / "cus_src.emb");
  write_embeddings(f.custom_tgt, dir / "cus_tgt.emb");

  const auto greek = greek_language();
  const auto latin = latin_language();
  LangIdModel lid = train_langid({{greek.code, greek.corpus(300, rng)},
                                  {latin.code, latin.corpus(300, rng)}});
  write_langid_model(lid, dir / "langid.bin");

  // Every tenth source sentence is in the wrong script and must be gated.
  std::string source, english;
  for (std::size_t i = 0; i < f.is_true.size(); ++i) {
    source += (i % 10 == 3 ? latin : greek).sentence(rng) + "\n";
    english += latin.sentence(rng, 3, 12) + "\n";
  }
  write_text(dir / "source.txt", source);
  write_text(dir / "english.txt", english);

  std::vector<IndexPair> pairs;
  for (std::size_t i = 0; i < f.is_true.size(); ++i) pairs.emplace_back(i, i);
  write_index_pairs(pairs, dir / "pairs.tsv");

  const EmbeddedPairs train_set = bilingual_training_pairs(params, encoder_seed, 800, rng);
  const EmbeddedPairs val_set = bilingual_training_pairs(params, encoder_seed, 200, rng);
  TrainConfig config;
  config.hidden_dim = 16;
  config.learning_rate = 0.1;
  config.batch_size = 32;
  config.max_epochs = 10;
  config.seed = seed;
  write_classifier(train(train_set, val_set, config), dir / "classifier.bin");

  const nlohmann::json manifest = {
      {"output_dir", "out"},
      {"seed", seed},
      {"inputs",
       {{"pairs", "pairs.tsv"},
        {"source_text", "source.txt"},
        {"english_text", "english.txt"},
        {"pretrained_src_emb", "pre_src.emb"},
        {"pretrained_tgt_emb", "pre_tgt.emb"},
        {"custom_src_emb", "cus_src.emb"},
        {"custom_tgt_emb", "cus_tgt.emb"},
        {"classifier_model", "classifier.bin"},
        {"langid_model", "langid.bin"}}},
      {"config",
       {{"langid", {{"lang", "xx"}, {"threshold", 0.8}}},
        {"margin", {{"k", 4}, {"variant", "ratio"}}},
        {"combine", {{"normalize", "minmax"}}},
        {"select", {{"budget", 1000}}}}}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  return dir / "manifest.json";
}

}  // namespace pcf::testkit
