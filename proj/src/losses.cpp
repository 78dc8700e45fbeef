#include "pecnet/losses.hpp"

#include <algorithm>
#include <cmath>

#include "pecnet/errors.hpp"
#include "pecnet/layers.hpp"

namespace pecnet {

LossWeights::LossWeights(double alpha_, double beta_) : alpha(alpha_), beta(beta_) {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(alpha + beta > 0.0)) {
    throw ConfigError("loss weights need alpha >= 0, beta >= 0 and alpha + beta > 0");
  }
}

Tensor one_hot(std::size_t class_index, std::size_t num_classes) {
  if (class_index >= num_classes) {
    throw IndexError("class index " + std::to_string(class_index) + " out of range for " +
                     std::to_string(num_classes) + " classes");
  }
  Tensor out({num_classes}, 0.0);
  out[class_index] = 1.0;
  return out;
}

double cross_entropy(const Tensor& predictions, const Tensor& labels) {
  if (predictions.shape() != labels.shape() || (predictions.rank() != 1 && predictions.rank() != 2)) {
    throw ShapeError("cross_entropy: predictions " + to_string(predictions.shape()) + " vs labels " +
                     to_string(labels.shape()));
  }
  const std::size_t n = predictions.rank() == 2 ? predictions.dim(0) : 1;
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (labels[i] != 0.0) total -= labels[i] * std::log(std::max(predictions[i], kProbabilityFloor));
  }
  return total / static_cast<double>(n);
}

Tensor cross_entropy_softmax_grad(const Tensor& logits, const Tensor& one_hot_label) {
  if (logits.shape() != one_hot_label.shape()) {
    throw ShapeError("cross_entropy_softmax_grad: logits " + to_string(logits.shape()) + " vs label " +
                     to_string(one_hot_label.shape()));
  }
  return softmax(logits) - one_hot_label;
}

double mae(const Tensor& predictions, const Tensor& targets) {
  if (predictions.shape() != targets.shape()) {
    throw ShapeError("mae: predictions " + to_string(predictions.shape()) + " vs targets " +
                     to_string(targets.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) total += std::abs(targets[i] - predictions[i]);
  return total / static_cast<double>(predictions.size());
}

Tensor mae_grad(const Tensor& predictions, const Tensor& targets) {
  if (predictions.shape() != targets.shape()) {
    throw ShapeError("mae_grad: predictions " + to_string(predictions.shape()) + " vs targets " +
                     to_string(targets.shape()));
  }
  const double inv_n = 1.0 / static_cast<double>(predictions.size());
  Tensor grad(predictions.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double r = predictions[i] - targets[i];
    grad[i] = r > 0.0 ? inv_n : (r < 0.0 ? -inv_n : 0.0);
  }
  return grad;
}

double combined_loss(double ce, double mae_value, const LossWeights& weights) {
  return weights.alpha * ce + weights.beta * mae_value;
}

}  // namespace pecnet
