#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "pcf/embedding_store.hpp"
#include "pcf/negative_sampler.hpp"
#include "pcf/score_table.hpp"

namespace pcf {

// Siamese pair classifier. One fully connected ReLU layer transforms both
// sentences; a softmax head reads [u_tr; v_tr; |u_tr - v_tr|]. Class 0 is
// "negative", class 1 "positive".
template <typename Scalar>
struct BasicClassifierModel {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Vector<Scalar>;

  Matrix W;  // hidden x input
  Vec b;     // hidden
  Matrix V;  // 2 x 3*hidden
  Vec c;     // 2

  std::uint64_t seed = 0;
  std::uint32_t epochs = 0;
  double val_accuracy = 0.0;

  Index input_dim() const { return W.cols(); }
  Index hidden_dim() const { return W.rows(); }

  static BasicClassifierModel zeros(Index input_dim, Index hidden_dim) {
    BasicClassifierModel m;
    m.W = Matrix::Zero(hidden_dim, input_dim);
    m.b = Vec::Zero(hidden_dim);
    m.V = Matrix::Zero(2, 3 * hidden_dim);
    m.c = Vec::Zero(2);
    return m;
  }

  bool consistent() const {
    const Index h = W.rows();
    return h > 0 && W.cols() > 0 && b.size() == h && V.rows() == 2 &&
           V.cols() == 3 * h && c.size() == 2;
  }

  bool finite() const {
    return W.allFinite() && b.allFinite() && V.allFinite() && c.allFinite() &&
           std::isfinite(val_accuracy);
  }
};

using ClassifierModel = BasicClassifierModel<double>;

template <typename Scalar>
struct ForwardResult {
  Eigen::Matrix<Scalar, 2, 1> probabilities;
  Vector<Scalar> u_tr;
  Vector<Scalar> v_tr;
};

// ReLU(W x + b).
template <typename Scalar, typename Derived>
Vector<Scalar> transform(const Eigen::MatrixBase<Derived>& x,
                         const BasicClassifierModel<Scalar>& model) {
  if (x.size() != model.input_dim()) {
    throw Error(Errc::DimMismatch, "input has " + std::to_string(x.size()) +
                                       " components, model expects " +
                                       std::to_string(model.input_dim()));
  }
  Vector<Scalar> h = model.W * x.template cast<Scalar>() + model.b;
  return h.cwiseMax(Scalar(0));
}

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> softmax2(const Eigen::Matrix<Scalar, 2, 1>& z) {
  const Scalar m = z.maxCoeff();
  const Scalar e0 = std::exp(z(0) - m);
  const Scalar e1 = std::exp(z(1) - m);
  return Eigen::Matrix<Scalar, 2, 1>(e0, e1) / (e0 + e1);
}

template <typename Scalar, typename U, typename V>
ForwardResult<Scalar> forward(const Eigen::MatrixBase<U>& u,
                              const Eigen::MatrixBase<V>& v,
                              const BasicClassifierModel<Scalar>& model) {
  ForwardResult<Scalar> out;
  out.u_tr = transform(u, model);
  out.v_tr = transform(v, model);
  const Index h = model.hidden_dim();
  Vector<Scalar> features(3 * h);
  features << out.u_tr, out.v_tr, (out.u_tr - out.v_tr).cwiseAbs();
  const Eigen::Matrix<Scalar, 2, 1> logits = model.V * features + model.c;
  out.probabilities = softmax2(logits);
  return out;
}

// cosine(u_tr, v_tr); 0 when either transform is a zero vector.
template <typename Scalar, typename U, typename V>
double classifier_score(const Eigen::MatrixBase<U>& u,
                        const Eigen::MatrixBase<V>& v,
                        const BasicClassifierModel<Scalar>& model) {
  if (u.size() != v.size()) {
    throw Error(Errc::DimMismatch, "pair vectors differ in size");
  }
  return cosine(transform(u, model), transform(v, model));
}

// Column-per-example embeddings with 0/1 labels.
struct EmbeddedPairs {
  Eigen::MatrixXd src;  // input_dim x n
  Eigen::MatrixXd tgt;  // input_dim x n
  std::vector<int> labels;

  Index size() const { return src.cols(); }
};

// Example i takes row first_row + i of each embedding matrix.
EmbeddedPairs attach_embeddings(std::span<const LabeledPair> pairs,
                                const EmbeddingMatrix& src,
                                const EmbeddingMatrix& tgt, Index first_row = 0);

struct ClassifierGradients {
  double loss = 0.0;  // mean cross-entropy
  ClassifierModel grad;
};

// Mean cross-entropy over the given columns and its exact gradient.
ClassifierGradients loss_and_gradients(const ClassifierModel& model,
                                       const EmbeddedPairs& data,
                                       std::span<const Index> columns);
double mean_loss(const ClassifierModel& model, const EmbeddedPairs& data);
double accuracy(const ClassifierModel& model, const EmbeddedPairs& data);

struct EpochStats {
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainConfig {
  double learning_rate = 0.1;
  Index batch_size = 64;
  std::uint32_t max_epochs = 50;
  std::uint32_t patience = 5;
  std::uint64_t seed = 0;
  Index hidden_dim = 256;
  std::function<void(const EpochStats&)> on_epoch;
};

// Uniform(+-1/sqrt(fan_in)) initialization from the seed.
ClassifierModel init_classifier(Index input_dim, Index hidden_dim,
                                std::uint64_t seed);

// Mini-batch gradient descent with early stopping on validation accuracy;
// returns the best-validation snapshot.
ClassifierModel train(const EmbeddedPairs& train_set,
                      const EmbeddedPairs& validation, const TrainConfig& config);

// Training rows come first in the embedding matrices, then validation rows.
ClassifierModel train(const LabeledPairSet& data, const EmbeddingMatrix& src,
                      const EmbeddingMatrix& tgt, const TrainConfig& config);

ScoreTable score_corpus_classifier(std::span<const IndexPair> pairs,
                                   const EmbeddingMatrix& src,
                                   const EmbeddingMatrix& tgt,
                                   const ClassifierModel& model,
                                   unsigned threads = 0);

void write_classifier(const ClassifierModel& model,
                      const std::filesystem::path& path);
ClassifierModel read_classifier(const std::filesystem::path& path);

}  // namespace pcf
