#include "pecnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "pecnet/errors.hpp"
#include "pecnet/model.hpp"

namespace pecnet {

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels) {
  if (predictions.size() != labels.size()) {
    throw ShapeError("accuracy: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw ShapeError("accuracy needs at least one sample");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double mse(const Tensor& predictions, const Tensor& targets) {
  if (predictions.shape() != targets.shape()) {
    throw ShapeError("mse: predictions " + to_string(predictions.shape()) + " vs targets " +
                     to_string(targets.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    total += d * d;
  }
  return total / static_cast<double>(predictions.size());
}

std::vector<std::size_t> argmax_rows(const Tensor& scores) {
  if (scores.rank() != 2) throw ShapeError("argmax_rows expects a [B, M] matrix");
  const std::size_t m = scores.dim(1);
  std::vector<std::size_t> out(scores.dim(0));
  for (std::size_t r = 0; r < out.size(); ++r) {
    const double* row = scores.data() + r * m;
    out[r] = static_cast<std::size_t>(std::max_element(row, row + m) - row);
  }
  return out;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (std::size_t c : counts) n += c;
  return n;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < num_classes; ++i) n += at(i, i);
  return n;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t n = 0;
  for (std::size_t j = 0; j < num_classes; ++j) n += at(truth, j);
  return n;
}

std::vector<double> ConfusionMatrix::per_class_accuracy() const {
  std::vector<double> out(num_classes, 0.0);
  for (std::size_t i = 0; i < num_classes; ++i) {
    const std::size_t n = row_sum(i);
    out[i] = n ? static_cast<double>(at(i, i)) / static_cast<double>(n) : 0.0;
  }
  return out;
}

void ConfusionMatrix::write_csv(std::ostream& os) const {
  os << "true\\predicted";
  for (std::size_t j = 0; j < num_classes; ++j) os << ',' << j;
  os << '\n';
  for (std::size_t i = 0; i < num_classes; ++i) {
    os << i;
    for (std::size_t j = 0; j < num_classes; ++j) os << ',' << at(i, j);
    os << '\n';
  }
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                 std::size_t num_classes) {
  if (predictions.size() != labels.size()) throw ShapeError("confusion_matrix: length mismatch");
  ConfusionMatrix cm{num_classes, std::vector<std::size_t>(num_classes * num_classes, 0)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes || predictions[i] >= num_classes) {
      throw IndexError("confusion_matrix: class index out of range for " + std::to_string(num_classes) +
                       " classes");
    }
    ++cm.counts[labels[i] * num_classes + predictions[i]];
  }
  return cm;
}

void EvalReport::write_text(std::ostream& os, const std::string& prefix) const {
  const auto old_precision = os.precision(17);
  if (accuracy) os << prefix << "accuracy=" << *accuracy << '\n';
  if (mse) os << prefix << "mse=" << *mse << '\n';
  if (mse_unscaled) os << prefix << "mse_unscaled=" << *mse_unscaled << '\n';
  if (per_class_accuracy) {
    for (std::size_t i = 0; i < per_class_accuracy->size(); ++i)
      os << prefix << "class_" << i << "_accuracy=" << (*per_class_accuracy)[i] << '\n';
  }
  os.precision(old_precision);
}

std::vector<std::size_t> class_labels(const Dataset& dataset) {
  std::vector<std::size_t> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& label = dataset.records[i].signal.class_label;
    if (!label) throw DataError("record " + std::to_string(i) + " has no class label");
    out.push_back(*label);
  }
  return out;
}

Tensor feature_matrix(const Dataset& dataset) {
  if (dataset.size() == 0) throw DataError("empty dataset");
  const std::size_t t = dataset.signal_length;
  Tensor out({dataset.size(), t});
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Tensor& v = dataset.records[i].signal.values;
    if (v.size() < t) throw ShapeError("record " + std::to_string(i) + " is shorter than the dataset length");
    std::copy(v.data(), v.data() + t, out.data() + i * t);
  }
  return out;
}

Tensor depth_matrix(const Dataset& dataset) {
  const std::size_t r = dataset.depth_outputs();
  if (r == 0) throw DataError("dataset has no depth labels");
  std::vector<std::size_t> idx(dataset.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return gather_depths(dataset, idx, r);
}

EvalReport evaluate(const Model& model, const Dataset& dataset) {
  EvalReport report;
  if (dataset.size() == 0) return report;
  const ModelConfig& cfg = model.config();
  const BatchOutput out = predict_dataset(model, dataset);
  if (cfg.has_classifier() && dataset.has_class_labels()) {
    const std::vector<std::size_t> predicted = argmax_rows(out.probabilities);
    const std::vector<std::size_t> truth = class_labels(dataset);
    report.accuracy = accuracy(predicted, truth);
    report.confusion = confusion_matrix(predicted, truth, cfg.classification_classes);
    report.per_class_accuracy = report.confusion->per_class_accuracy();
  }
  if (cfg.has_regressor() && dataset.has_depth_labels() && dataset.depth_outputs() >= cfg.regression_outputs) {
    std::vector<std::size_t> idx(dataset.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const Tensor targets = gather_depths(dataset, idx, cfg.regression_outputs);
    report.mse = mse(out.depths, targets);
    const double s = dataset.label_scale;
    report.mse_unscaled = *report.mse / (s * s);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Baselines

double LinearModel::predict(std::span<const double> features) const {
  if (features.size() != weights.size()) throw ShapeError("linear model feature length mismatch");
  double acc = bias;
  for (std::size_t i = 0; i < features.size(); ++i) acc += weights[i] * features[i];
  return acc;
}

Tensor LinearModel::predict(const Tensor& features) const {
  if (features.rank() != 2) throw ShapeError("linear model expects [N, T] features");
  const std::size_t t = features.dim(1);
  Tensor out({features.dim(0)});
  for (std::size_t i = 0; i < features.dim(0); ++i) out[i] = predict({features.data() + i * t, t});
  return out;
}

LinearModel fit_ridge(const Tensor& features, const Tensor& targets, double lambda) {
  if (features.rank() != 2 || targets.rank() != 1 || features.dim(0) != targets.dim(0)) {
    throw ShapeError("fit_ridge: features " + to_string(features.shape()) + " vs targets " +
                     to_string(targets.shape()));
  }
  if (!(lambda >= 0.0)) throw ConfigError("ridge lambda must be >= 0");
  const auto n = static_cast<Eigen::Index>(features.dim(0));
  const auto t = static_cast<Eigen::Index>(features.dim(1));
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMatrix> x(features.data(), n, t);
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), n);

  // Augmented design [X 1]; the bias column is not penalised.
  Eigen::MatrixXd a(t + 1, t + 1);
  a.topLeftCorner(t, t).noalias() = x.transpose() * x;
  const Eigen::VectorXd col_sums = x.colwise().sum().transpose();
  a.topRightCorner(t, 1) = col_sums;
  a.bottomLeftCorner(1, t) = col_sums.transpose();
  a(t, t) = static_cast<double>(n);
  a.topLeftCorner(t, t).diagonal().array() += lambda;

  Eigen::VectorXd rhs(t + 1);
  rhs.head(t).noalias() = x.transpose() * y;
  rhs(t) = y.sum();

  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  if (!(rcond > 1e-14)) {
    throw RankError("normal equations are singular or ill-conditioned (rcond " + std::to_string(rcond) +
                    "); use a ridge lambda > 0");
  }
  const Eigen::VectorXd solution = llt.solve(rhs);

  LinearModel model;
  model.weights = Tensor({static_cast<std::size_t>(t)});
  for (Eigen::Index i = 0; i < t; ++i) model.weights[static_cast<std::size_t>(i)] = solution(i);
  model.bias = solution(t);
  model.ridge_lambda = lambda;
  return model;
}

NearestCentroid NearestCentroid::fit(const Tensor& signals, std::span<const std::size_t> labels,
                                     std::size_t num_classes) {
  if (signals.rank() != 2 || signals.dim(0) != labels.size()) {
    throw ShapeError("nearest_centroid: signals " + to_string(signals.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (num_classes == 0) throw DataError("nearest_centroid needs at least one class");
  const std::size_t t = signals.dim(1);
  NearestCentroid nc;
  nc.centroids_ = Tensor({num_classes, t}, 0.0);
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) throw IndexError("nearest_centroid: label out of range");
    ++counts[labels[i]];
    for (std::size_t j = 0; j < t; ++j) nc.centroids_.at(labels[i], j) += signals.at(i, j);
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) throw DataError("nearest_centroid: class " + std::to_string(c) + " has no samples");
    for (std::size_t j = 0; j < t; ++j) nc.centroids_.at(c, j) /= static_cast<double>(counts[c]);
  }
  return nc;
}

std::size_t NearestCentroid::classify(std::span<const double> signal) const {
  const std::size_t m = centroids_.dim(0), t = centroids_.dim(1);
  if (signal.size() != t) throw ShapeError("nearest_centroid: signal length mismatch");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < m; ++c) {
    double d = 0.0;
    for (std::size_t j = 0; j < t; ++j) {
      const double diff = signal[j] - centroids_.at(c, j);
      d += diff * diff;
    }
    if (d < best_dist) {
      best_dist = d;
      best = c;
    }
  }
  return best;
}

std::vector<std::size_t> NearestCentroid::classify_all(const Tensor& signals) const {
  if (signals.rank() != 2) throw ShapeError("nearest_centroid expects [N, T] signals");
  const std::size_t t = signals.dim(1);
  std::vector<std::size_t> out(signals.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = classify({signals.data() + i * t, t});
  return out;
}

}  // namespace pecnet
