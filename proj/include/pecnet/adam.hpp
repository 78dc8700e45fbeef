#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pecnet/tensor.hpp"

namespace pecnet {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// Adam with bias correction. Moment tensors mirror the parameter shapes
// given at construction.
class AdamState {
 public:
  AdamState(AdamConfig config, std::span<const Shape> parameter_shapes);

  const AdamConfig& config() const noexcept { return config_; }
  std::size_t step_count() const noexcept { return step_count_; }
  const std::vector<Tensor>& first_moment() const noexcept { return first_moment_; }
  const std::vector<Tensor>& second_moment() const noexcept { return second_moment_; }

  // Updates `params` in place from `grads`; both must line up with the
  // construction shapes.
  void step(std::span<Tensor* const> params, std::span<const Tensor* const> grads);

 private:
  AdamConfig config_;
  std::size_t step_count_ = 0;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
};

}  // namespace pecnet
