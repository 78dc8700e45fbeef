#include "pecnet/adam.hpp"

#include <cmath>

#include "pecnet/errors.hpp"

namespace pecnet {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("adam learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
}

AdamState::AdamState(AdamConfig config, std::span<const Shape> parameter_shapes) : config_(config) {
  config_.validate();
  first_moment_.reserve(parameter_shapes.size());
  second_moment_.reserve(parameter_shapes.size());
  for (const Shape& s : parameter_shapes) {
    first_moment_.emplace_back(s, 0.0);
    second_moment_.emplace_back(s, 0.0);
  }
}

void AdamState::step(std::span<Tensor* const> params, std::span<const Tensor* const> grads) {
  if (params.size() != first_moment_.size() || grads.size() != first_moment_.size()) {
    throw ShapeError("adam_step: expected " + std::to_string(first_moment_.size()) + " parameter tensors");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != first_moment_[i].shape() || grads[i]->shape() != first_moment_[i].shape()) {
      throw ShapeError("adam_step: tensor " + std::to_string(i) + " has shape " + to_string(params[i]->shape()) +
                       " / grad " + to_string(grads[i]->shape()) + ", state expects " +
                       to_string(first_moment_[i].shape()));
    }
  }

  ++step_count_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double t = static_cast<double>(step_count_);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i]->data();
    const double* g = grads[i]->data();
    double* m = first_moment_[i].data();
    double* v = second_moment_[i].data();
    for (std::size_t j = 0, n = params[i]->size(); j < n; ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace pecnet
