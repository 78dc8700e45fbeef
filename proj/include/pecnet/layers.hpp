#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "pecnet/tensor.hpp"

namespace pecnet {

// Layers accept a single sample ([C, T] or [features]) or a batch with a
// leading batch axis ([B, C, T] or [B, features]); output rank follows input.

struct Conv1DGradients {
  Tensor input;
  Tensor kernels;
  Tensor bias;
};

// Valid-padding, stride-1 cross-correlation.
class Conv1D {
 public:
  Conv1D(std::size_t in_channels, std::size_t out_channels, std::size_t width);

  std::size_t in_channels() const noexcept { return kernels_.dim(1); }
  std::size_t out_channels() const noexcept { return kernels_.dim(0); }
  std::size_t width() const noexcept { return kernels_.dim(2); }
  std::size_t output_length(std::size_t length) const noexcept { return length - width() + 1; }

  Tensor& kernels() noexcept { return kernels_; }
  const Tensor& kernels() const noexcept { return kernels_; }
  Tensor& bias() noexcept { return bias_; }
  const Tensor& bias() const noexcept { return bias_; }

  // Weights ~ N(0, 2 / fan_in), biases zero.
  void he_init(std::mt19937_64& rng);

  Tensor forward(const Tensor& input);
  // Forward without touching the cache.
  Tensor infer(const Tensor& input) const;
  // Throws StateError when forward has not run. The input gradient is
  // skipped (left empty) when `need_input_grad` is false.
  Conv1DGradients backward(const Tensor& grad_out, bool need_input_grad = true) const;

  bool has_cache() const noexcept { return cached_.has_value; }
  void clear_cache() noexcept { cached_ = {}; }

 private:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  struct Cache {
    bool has_value = false;
    bool batched = false;
    std::size_t batch = 0;
    std::size_t length = 0;
    RowMatrix columns;  // im2col of the input: [C*K, B*L]
  };

  Tensor run(const Tensor& input, Cache& cache) const;

  Tensor kernels_;  // [out, in, width]
  Tensor bias_;     // [out]
  Cache cached_;
};

struct DenseGradients {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

// Fully connected affine map, no activation.
class Dense {
 public:
  Dense(std::size_t in_units, std::size_t out_units);

  std::size_t in_units() const noexcept { return weights_.dim(1); }
  std::size_t out_units() const noexcept { return weights_.dim(0); }

  Tensor& weights() noexcept { return weights_; }
  const Tensor& weights() const noexcept { return weights_; }
  Tensor& bias() noexcept { return bias_; }
  const Tensor& bias() const noexcept { return bias_; }

  void he_init(std::mt19937_64& rng);

  Tensor forward(const Tensor& input);
  Tensor infer(const Tensor& input) const;
  DenseGradients backward(const Tensor& grad_out) const;

  bool has_cache() const noexcept { return !cached_input_.empty(); }
  void clear_cache() noexcept { cached_input_ = Tensor(); }

 private:
  Tensor weights_;  // [out, in]
  Tensor bias_;     // [out]
  Tensor cached_input_;
};

Tensor relu_forward(const Tensor& input);
Tensor relu_backward(const Tensor& grad_out, const Tensor& cached_input);

struct PoolSpec {
  explicit PoolSpec(std::size_t size);
  PoolSpec(std::size_t size, std::size_t stride);

  std::size_t pool_size;
  std::size_t stride;
};

// Winner positions of a max-pool forward pass, as flat input offsets.
struct PoolIndices {
  Shape input_shape;
  Shape output_shape;
  std::vector<std::size_t> argmax;
};

struct PoolResult {
  Tensor output;
  PoolIndices indices;
};

// Non-overlapping windows; the trailing T % pool_size steps are dropped and
// the earliest index wins ties.
PoolResult maxpool_forward(const PoolSpec& spec, const Tensor& input);
Tensor maxpool_backward(const Tensor& grad_out, const PoolIndices& indices);

Tensor gap_forward(const Tensor& input);
Tensor gap_backward(const Tensor& grad_out, std::size_t length);

// Max-shifted softmax over a vector, or over each row of a [B, M] matrix.
Tensor softmax(const Tensor& input);

}  // namespace pecnet
