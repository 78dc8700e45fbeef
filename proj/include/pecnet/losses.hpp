#pragma once

#include <cstddef>

#include "pecnet/tensor.hpp"

namespace pecnet {

// Weights of the classification (alpha) and regression (beta) terms.
struct LossWeights {
  LossWeights(double alpha = 1.0, double beta = 1.0);

  double alpha;
  double beta;
};

inline constexpr double kProbabilityFloor = 1e-12;

Tensor one_hot(std::size_t class_index, std::size_t num_classes);

// Mean categorical cross entropy. `predictions` and `labels` are [M] for a
// single sample or [N, M] for a batch; log is clamped at kProbabilityFloor.
double cross_entropy(const Tensor& predictions, const Tensor& labels);

// d cross_entropy(softmax(logits)) / d logits for one sample (or each row):
// softmax(logits) - label. The caller applies any batch averaging.
Tensor cross_entropy_softmax_grad(const Tensor& logits, const Tensor& one_hot_label);

// Mean absolute error over every element.
double mae(const Tensor& predictions, const Tensor& targets);
// sign(prediction - target) / N with sign(0) = 0.
Tensor mae_grad(const Tensor& predictions, const Tensor& targets);

double combined_loss(double ce, double mae_value, const LossWeights& weights);

}  // namespace pecnet
