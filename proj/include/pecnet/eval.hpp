#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pecnet/dataset.hpp"
#include "pecnet/tensor.hpp"

namespace pecnet {

class Model;

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels);

// Mean of squared differences over all elements.
double mse(const Tensor& predictions, const Tensor& targets);

// Index of the largest entry of each row of a [B, M] matrix (first on ties).
std::vector<std::size_t> argmax_rows(const Tensor& scores);

struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::size_t> counts;  // row = true class, column = predicted

  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts.at(truth * num_classes + predicted); }
  std::size_t total() const;
  std::size_t trace() const;
  std::size_t row_sum(std::size_t truth) const;
  std::vector<double> per_class_accuracy() const;
  void write_csv(std::ostream& os) const;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                 std::size_t num_classes);

struct EvalReport {
  std::optional<double> accuracy;
  std::optional<double> mse;           // scaled-label units
  std::optional<double> mse_unscaled;  // original units
  std::optional<ConfusionMatrix> confusion;
  std::optional<std::vector<double>> per_class_accuracy;

  // Flat `key=value` lines, each key prefixed with `prefix`.
  void write_text(std::ostream& os, const std::string& prefix = "") const;
};

std::vector<std::size_t> class_labels(const Dataset& dataset);
// [N, T] matrix of raw signal values (first channel).
Tensor feature_matrix(const Dataset& dataset);
// [N, R] depth labels as stored (scaled units when the dataset is scaled).
Tensor depth_matrix(const Dataset& dataset);

// Metrics of `model` on `dataset` for every head the model has and the
// dataset labels.
EvalReport evaluate(const Model& model, const Dataset& dataset);

// ---------------------------------------------------------------------------
// Classical baselines

struct LinearModel {
  Tensor weights;  // [T]
  double bias = 0.0;
  double ridge_lambda = 0.0;

  double predict(std::span<const double> features) const;
  Tensor predict(const Tensor& features) const;  // [N, T] -> [N]
};

// Minimises sum (w.x + b - y)^2 + lambda |w|^2 with an unpenalised bias via
// the normal equations and a Cholesky factorisation. lambda = 0 is ordinary
// least squares; a singular system then raises RankError.
LinearModel fit_ridge(const Tensor& features, const Tensor& targets, double lambda);

class NearestCentroid {
 public:
  // `signals` is [N, T]; every class in [0, num_classes) needs a sample.
  static NearestCentroid fit(const Tensor& signals, std::span<const std::size_t> labels, std::size_t num_classes);

  // Closest centroid in Euclidean distance, lowest index on ties.
  std::size_t classify(std::span<const double> signal) const;
  std::vector<std::size_t> classify_all(const Tensor& signals) const;

  const Tensor& centroids() const noexcept { return centroids_; }

 private:
  Tensor centroids_;  // [M, T]
};

}  // namespace pecnet
