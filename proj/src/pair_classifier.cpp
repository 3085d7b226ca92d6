#include "pcf/pair_classifier.hpp"

#include <algorithm>
#include <numeric>

#include "binary_io.hpp"
#include "pcf/parallel.hpp"
#include "pcf/rng.hpp"

namespace pcf {
namespace {

constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kShuffleStream = 12;
constexpr std::size_t kScoreBlock = 1024;

using Eigen::MatrixXd;

struct Activations {
  MatrixXd hu, hv;  // pre-activations
  MatrixXd au, av;  // ReLU outputs
  MatrixXd features;
  MatrixXd logits;
};

Activations run_batch(const ClassifierModel& m, const MatrixXd& u,
                      const MatrixXd& v) {
  const Index h = m.hidden_dim();
  Activations a;
  a.hu = (m.W * u).colwise() + m.b;
  a.hv = (m.W * v).colwise() + m.b;
  a.au = a.hu.cwiseMax(0.0);
  a.av = a.hv.cwiseMax(0.0);
  a.features.resize(3 * h, u.cols());
  a.features.topRows(h) = a.au;
  a.features.middleRows(h, h) = a.av;
  a.features.bottomRows(h) = (a.au - a.av).cwiseAbs();
  a.logits = (m.V * a.features).colwise() + m.c;
  return a;
}

// -log softmax(z)[label].
double cross_entropy(double z0, double z1, int label) {
  const double mx = std::max(z0, z1);
  const double lse = mx + std::log(std::exp(z0 - mx) + std::exp(z1 - mx));
  return lse - (label == 1 ? z1 : z0);
}

void check_labels(const EmbeddedPairs& data, const char* which) {
  bool pos = false;
  bool neg = false;
  for (int y : data.labels) {
    pos = pos || y == 1;
    neg = neg || y == 0;
  }
  if (!pos || !neg) {
    throw Error(Errc::DegenerateLabels,
                std::string(which) + " set needs both positive and negative pairs");
  }
}

void check_pairs(const EmbeddedPairs& data, Index dim, const char* which) {
  if (data.src.rows() != dim || data.tgt.rows() != dim ||
      data.tgt.cols() != data.src.cols() ||
      static_cast<Index>(data.labels.size()) != data.src.cols()) {
    throw Error(Errc::DimMismatch, std::string(which) + " set has inconsistent shapes");
  }
}

template <typename Derived>
void put_matrix(detail::ByteWriter& w, const Eigen::MatrixBase<Derived>& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) w.put(static_cast<double>(m(i, j)));
  }
}

MatrixXd get_matrix(detail::ByteReader& r, Index rows, Index cols) {
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = r.get<double>();
  }
  return m;
}

}  // namespace

EmbeddedPairs attach_embeddings(std::span<const LabeledPair> pairs,
                                const EmbeddingMatrix& src,
                                const EmbeddingMatrix& tgt, Index first_row) {
  if (src.dim() != tgt.dim()) {
    throw Error(Errc::DimMismatch, "source and target embeddings differ in dim");
  }
  const auto n = static_cast<Index>(pairs.size());
  if (first_row + n > src.rows() || first_row + n > tgt.rows()) {
    throw Error(Errc::RowCountMismatch,
                "embedding files hold " + std::to_string(src.rows()) + "/" +
                    std::to_string(tgt.rows()) + " rows, need " +
                    std::to_string(first_row + n));
  }
  EmbeddedPairs out;
  out.src = src.data().middleRows(first_row, n).cast<double>().transpose();
  out.tgt = tgt.data().middleRows(first_row, n).cast<double>().transpose();
  out.labels.reserve(pairs.size());
  for (const auto& p : pairs) out.labels.push_back(p.label == PairLabel::Positive ? 1 : 0);
  return out;
}

ClassifierGradients loss_and_gradients(const ClassifierModel& model,
                                       const EmbeddedPairs& data,
                                       std::span<const Index> columns) {
  const Index h = model.hidden_dim();
  const auto n = static_cast<Index>(columns.size());
  MatrixXd u(model.input_dim(), n);
  MatrixXd v(model.input_dim(), n);
  for (Index k = 0; k < n; ++k) {
    u.col(k) = data.src.col(columns[k]);
    v.col(k) = data.tgt.col(columns[k]);
  }
  const Activations a = run_batch(model, u, v);

  ClassifierGradients out;
  MatrixXd dz(2, n);
  for (Index k = 0; k < n; ++k) {
    const int y = data.labels[static_cast<std::size_t>(columns[k])];
    const double z0 = a.logits(0, k);
    const double z1 = a.logits(1, k);
    out.loss += cross_entropy(z0, z1, y);
    const double mx = std::max(z0, z1);
    const double e0 = std::exp(z0 - mx);
    const double e1 = std::exp(z1 - mx);
    dz(0, k) = e0 / (e0 + e1) - (y == 0 ? 1.0 : 0.0);
    dz(1, k) = e1 / (e0 + e1) - (y == 1 ? 1.0 : 0.0);
  }
  out.loss /= static_cast<double>(n);
  dz /= static_cast<double>(n);

  out.grad.V = dz * a.features.transpose();
  out.grad.c = dz.rowwise().sum();
  const MatrixXd df = model.V.transpose() * dz;
  const MatrixXd sign = (a.au - a.av).cwiseSign();
  const MatrixXd d_abs = df.bottomRows(h).cwiseProduct(sign);
  const MatrixXd dhu = (df.topRows(h) + d_abs)
                           .cwiseProduct((a.hu.array() > 0.0).cast<double>().matrix());
  const MatrixXd dhv = (df.middleRows(h, h) - d_abs)
                           .cwiseProduct((a.hv.array() > 0.0).cast<double>().matrix());
  out.grad.W = dhu * u.transpose() + dhv * v.transpose();
  out.grad.b = (dhu + dhv).rowwise().sum();
  return out;
}

double mean_loss(const ClassifierModel& model, const EmbeddedPairs& data) {
  const Activations a = run_batch(model, data.src, data.tgt);
  double loss = 0.0;
  for (Index k = 0; k < data.size(); ++k) {
    loss += cross_entropy(a.logits(0, k), a.logits(1, k),
                          data.labels[static_cast<std::size_t>(k)]);
  }
  return loss / static_cast<double>(data.size());
}

double accuracy(const ClassifierModel& model, const EmbeddedPairs& data) {
  if (data.size() == 0) return 0.0;
  const Activations a = run_batch(model, data.src, data.tgt);
  Index correct = 0;
  for (Index k = 0; k < data.size(); ++k) {
    const int predicted = a.logits(1, k) > a.logits(0, k) ? 1 : 0;
    correct += predicted == data.labels[static_cast<std::size_t>(k)];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

ClassifierModel init_classifier(Index input_dim, Index hidden_dim,
                                std::uint64_t seed) {
  Rng rng(derive_seed(seed, kInitStream));
  auto fill = [&rng](auto& m, double fan_in) {
    const double r = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> dist(-r, r);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  };
  ClassifierModel m = ClassifierModel::zeros(input_dim, hidden_dim);
  fill(m.W, static_cast<double>(input_dim));
  fill(m.b, static_cast<double>(input_dim));
  fill(m.V, static_cast<double>(3 * hidden_dim));
  fill(m.c, static_cast<double>(3 * hidden_dim));
  m.seed = seed;
  return m;
}

ClassifierModel train(const EmbeddedPairs& train_set,
                      const EmbeddedPairs& validation, const TrainConfig& config) {
  if (!(config.learning_rate > 0.0) || config.batch_size < 1 ||
      config.max_epochs < 1 || config.patience < 1 || config.hidden_dim < 1) {
    throw Error(Errc::UsageError, "training hyperparameters must be positive");
  }
  const Index dim = train_set.src.rows();
  check_pairs(train_set, dim, "training");
  check_pairs(validation, dim, "validation");
  check_labels(train_set, "training");
  check_labels(validation, "validation");

  ClassifierModel model = init_classifier(dim, config.hidden_dim, config.seed);
  ClassifierModel best = model;
  double best_accuracy = -1.0;
  std::uint32_t stale = 0;

  std::vector<Index> order(static_cast<std::size_t>(train_set.size()));
  std::iota(order.begin(), order.end(), Index{0});
  const double lr = config.learning_rate;

  for (std::uint32_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, kShuffleStream, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const auto g = loss_and_gradients(
          model, train_set, std::span<const Index>(order).subspan(start, end - start));
      if (!std::isfinite(g.loss)) {
        throw Error(Errc::DivergedTraining,
                    "non-finite loss in epoch " + std::to_string(epoch));
      }
      model.W -= lr * g.grad.W;
      model.b -= lr * g.grad.b;
      model.V -= lr * g.grad.V;
      model.c -= lr * g.grad.c;
    }

    EpochStats stats{epoch, mean_loss(model, train_set), accuracy(model, validation)};
    if (!std::isfinite(stats.train_loss) || !model.finite()) {
      throw Error(Errc::DivergedTraining,
                  "non-finite parameters after epoch " + std::to_string(epoch));
    }
    if (config.on_epoch) config.on_epoch(stats);

    if (stats.val_accuracy > best_accuracy) {
      best = model;
      best.epochs = epoch;
      best.val_accuracy = stats.val_accuracy;
      best_accuracy = stats.val_accuracy;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  best.seed = config.seed;
  return best;
}

ClassifierModel train(const LabeledPairSet& data, const EmbeddingMatrix& src,
                      const EmbeddingMatrix& tgt, const TrainConfig& config) {
  const auto t = static_cast<Index>(data.train.size());
  const auto v = static_cast<Index>(data.validation.size());
  if (src.rows() != t + v || tgt.rows() != t + v) {
    throw Error(Errc::RowCountMismatch,
                "expected " + std::to_string(t + v) +
                    " embedding rows (training then validation), got " +
                    std::to_string(src.rows()) + "/" + std::to_string(tgt.rows()));
  }
  return train(attach_embeddings(data.train, src, tgt, 0),
               attach_embeddings(data.validation, src, tgt, t), config);
}

ScoreTable score_corpus_classifier(std::span<const IndexPair> pairs,
                                   const EmbeddingMatrix& src,
                                   const EmbeddingMatrix& tgt,
                                   const ClassifierModel& model,
                                   unsigned threads) {
  if (src.dim() != model.input_dim() || tgt.dim() != model.input_dim()) {
    throw Error(Errc::DimMismatch, "embedding dim " + std::to_string(src.dim()) + "/" +
                                       std::to_string(tgt.dim()) + " vs model input " +
                                       std::to_string(model.input_dim()));
  }
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (pairs[p].first >= static_cast<std::size_t>(src.rows()) ||
        pairs[p].second >= static_cast<std::size_t>(tgt.rows())) {
      throw Error(Errc::IndexOutOfRange, "pair " + std::to_string(p) + " out of range");
    }
  }
  ScoreTable table(pairs.size());
  parallel_for_blocks(pairs.size(), kScoreBlock, threads,
                      [&](std::size_t b, std::size_t e) {
                        for (std::size_t p = b; p < e; ++p) {
                          const auto s = static_cast<Index>(pairs[p].first);
                          const auto t = static_cast<Index>(pairs[p].second);
                          table[p].score = classifier_score(
                              src.row(s).transpose(), tgt.row(t).transpose(), model);
                        }
                      });
  return table;
}

void write_classifier(const ClassifierModel& model,
                      const std::filesystem::path& path) {
  if (!model.consistent()) {
    throw Error(Errc::DimMismatch, "classifier parameters have inconsistent shapes");
  }
  detail::ByteWriter w;
  w.put_bytes("CLS1");
  w.put(kModelVersion);
  w.put(static_cast<std::uint32_t>(model.input_dim()));
  w.put(static_cast<std::uint32_t>(model.hidden_dim()));
  put_matrix(w, model.W);
  put_matrix(w, model.b);
  put_matrix(w, model.V);
  put_matrix(w, model.c);
  w.put(model.seed);
  w.put(model.epochs);
  w.put(model.val_accuracy);
  w.save(path);
}

ClassifierModel read_classifier(const std::filesystem::path& path) {
  detail::ByteReader r(path);
  r.expect_magic("CLS1");
  if (r.get<std::uint32_t>() != kModelVersion) {
    throw Error(Errc::MalformedFile, path.string() + ": unsupported version");
  }
  const Index d = r.get<std::uint32_t>();
  const Index h = r.get<std::uint32_t>();
  if (d < 1 || h < 1) throw Error(Errc::MalformedFile, path.string() + ": empty shape");
  ClassifierModel m;
  m.W = get_matrix(r, h, d);
  m.b = get_matrix(r, h, 1);
  m.V = get_matrix(r, 2, 3 * h);
  m.c = get_matrix(r, 2, 1);
  m.seed = r.get<std::uint64_t>();
  m.epochs = r.get<std::uint32_t>();
  m.val_accuracy = r.get<double>();
  r.expect_end();
  if (!m.finite() || m.val_accuracy < 0.0 || m.val_accuracy > 1.0) {
    throw Error(Errc::MalformedFile, path.string() + ": invalid parameters");
  }
  return m;
}

}  // namespace pcf
