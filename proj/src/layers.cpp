#include "pecnet/layers.hpp"

#include <algorithm>
#include <cmath>

#include "pecnet/errors.hpp"

namespace pecnet {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

void normal_fill(Tensor& t, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& x : t.values()) x = dist(rng);
}

// Views a [C, T] or [B, C, T] tensor as batch, channels, length.
struct SeqDims {
  bool batched;
  std::size_t batch, channels, length;
};

SeqDims seq_dims(const Tensor& t, const char* who) {
  if (t.rank() == 2) return {false, 1, t.dim(0), t.dim(1)};
  if (t.rank() == 3) return {true, t.dim(0), t.dim(1), t.dim(2)};
  throw ShapeError(std::string(who) + ": expected [C,T] or [B,C,T], got " + to_string(t.shape()));
}

Shape seq_shape(bool batched, std::size_t batch, std::size_t channels, std::size_t length) {
  if (batched) return {batch, channels, length};
  return {channels, length};
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv1D

Conv1D::Conv1D(std::size_t in_channels, std::size_t out_channels, std::size_t width)
    : kernels_({out_channels, in_channels, width}, 0.0), bias_({out_channels}, 0.0) {}

void Conv1D::he_init(std::mt19937_64& rng) {
  normal_fill(kernels_, std::sqrt(2.0 / static_cast<double>(in_channels() * width())), rng);
  bias_.fill(0.0);
}

Tensor Conv1D::forward(const Tensor& input) {
  Cache cache;
  Tensor out = run(input, cache);
  cached_ = std::move(cache);
  return out;
}

Tensor Conv1D::infer(const Tensor& input) const {
  Cache scratch;
  return run(input, scratch);
}

Tensor Conv1D::run(const Tensor& input, Cache& cache) const {
  const SeqDims d = seq_dims(input, "conv1d_forward");
  const std::size_t k_width = width();
  if (d.channels != in_channels()) {
    throw ShapeError("conv1d_forward: input has " + std::to_string(d.channels) + " channels, layer expects " +
                     std::to_string(in_channels()));
  }
  if (d.length < k_width) {
    throw ShapeError("conv1d_forward: signal length " + std::to_string(d.length) + " shorter than kernel width " +
                     std::to_string(k_width));
  }
  const std::size_t out_len = d.length - k_width + 1;
  const std::size_t rows = d.channels * k_width;
  const std::size_t cols = d.batch * out_len;

  cache.columns.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t c = 0; c < d.channels; ++c) {
    for (std::size_t k = 0; k < k_width; ++k) {
      double* dst = cache.columns.data() + (c * k_width + k) * cols;
      for (std::size_t b = 0; b < d.batch; ++b) {
        const double* src = input.data() + (b * d.channels + c) * d.length + k;
        std::copy(src, src + out_len, dst + b * out_len);
      }
    }
  }

  const ConstRowMap w(kernels_.data(), static_cast<Eigen::Index>(out_channels()), static_cast<Eigen::Index>(rows));
  RowMatrix y(static_cast<Eigen::Index>(out_channels()), static_cast<Eigen::Index>(cols));
  y.noalias() = w * cache.columns;

  Tensor out(seq_shape(d.batched, d.batch, out_channels(), out_len));
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t o = 0; o < out_channels(); ++o) {
      const double* src = y.data() + o * cols + b * out_len;
      double* dst = out.data() + (b * out_channels() + o) * out_len;
      const double bo = bias_[o];
      for (std::size_t t = 0; t < out_len; ++t) dst[t] = src[t] + bo;
    }
  }

  cache.has_value = true;
  cache.batched = d.batched;
  cache.batch = d.batch;
  cache.length = d.length;
  return out;
}

Conv1DGradients Conv1D::backward(const Tensor& grad_out, bool need_input_grad) const {
  if (!cached_.has_value) throw StateError("conv1d_backward called before forward");
  const std::size_t k_width = width();
  const std::size_t out_len = cached_.length - k_width + 1;
  const Shape expected = seq_shape(cached_.batched, cached_.batch, out_channels(), out_len);
  if (grad_out.shape() != expected) {
    throw ShapeError("conv1d_backward: grad shape " + to_string(grad_out.shape()) + ", expected " +
                     to_string(expected));
  }
  const std::size_t rows = in_channels() * k_width;
  const std::size_t cols = cached_.batch * out_len;

  RowMatrix g(static_cast<Eigen::Index>(out_channels()), static_cast<Eigen::Index>(cols));
  for (std::size_t b = 0; b < cached_.batch; ++b) {
    for (std::size_t o = 0; o < out_channels(); ++o) {
      const double* src = grad_out.data() + (b * out_channels() + o) * out_len;
      std::copy(src, src + out_len, g.data() + o * cols + b * out_len);
    }
  }

  Conv1DGradients grads;
  grads.kernels = Tensor(kernels_.shape());
  RowMap gw(grads.kernels.data(), static_cast<Eigen::Index>(out_channels()), static_cast<Eigen::Index>(rows));
  gw.noalias() = g * cached_.columns.transpose();

  grads.bias = Tensor(bias_.shape());
  for (std::size_t o = 0; o < out_channels(); ++o) grads.bias[o] = g.row(static_cast<Eigen::Index>(o)).sum();

  if (need_input_grad) {
    const ConstRowMap w(kernels_.data(), static_cast<Eigen::Index>(out_channels()), static_cast<Eigen::Index>(rows));
    RowMatrix gcols(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    gcols.noalias() = w.transpose() * g;
    grads.input = Tensor(seq_shape(cached_.batched, cached_.batch, in_channels(), cached_.length));
    for (std::size_t c = 0; c < in_channels(); ++c) {
      for (std::size_t k = 0; k < k_width; ++k) {
        const double* src = gcols.data() + (c * k_width + k) * cols;
        for (std::size_t b = 0; b < cached_.batch; ++b) {
          double* dst = grads.input.data() + (b * in_channels() + c) * cached_.length + k;
          const double* s = src + b * out_len;
          for (std::size_t t = 0; t < out_len; ++t) dst[t] += s[t];
        }
      }
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::size_t in_units, std::size_t out_units) : weights_({out_units, in_units}, 0.0), bias_({out_units}, 0.0) {}

void Dense::he_init(std::mt19937_64& rng) {
  normal_fill(weights_, std::sqrt(2.0 / static_cast<double>(in_units())), rng);
  bias_.fill(0.0);
}

Tensor Dense::forward(const Tensor& input) {
  Tensor out = infer(input);
  cached_input_ = input;
  return out;
}

Tensor Dense::infer(const Tensor& input) const {
  const bool batched = input.rank() == 2;
  if ((input.rank() != 1 && !batched) || input.dim(input.rank() - 1) != in_units()) {
    throw ShapeError("fc_forward: input " + to_string(input.shape()) + " does not match " +
                     std::to_string(in_units()) + " input units");
  }
  const std::size_t batch = batched ? input.dim(0) : 1;
  const auto n_in = static_cast<Eigen::Index>(in_units());
  const auto n_out = static_cast<Eigen::Index>(out_units());

  const ConstRowMap x(input.data(), static_cast<Eigen::Index>(batch), n_in);
  const ConstRowMap w(weights_.data(), n_out, n_in);
  Tensor out(batched ? Shape{batch, out_units()} : Shape{out_units()});
  RowMap y(out.data(), static_cast<Eigen::Index>(batch), n_out);
  y.noalias() = x * w.transpose();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < out_units(); ++o) out[b * out_units() + o] += bias_[o];
  return out;
}

DenseGradients Dense::backward(const Tensor& grad_out) const {
  if (cached_input_.empty()) throw StateError("fc_backward called before forward");
  const bool batched = cached_input_.rank() == 2;
  const std::size_t batch = batched ? cached_input_.dim(0) : 1;
  const Shape expected = batched ? Shape{batch, out_units()} : Shape{out_units()};
  if (grad_out.shape() != expected) {
    throw ShapeError("fc_backward: grad shape " + to_string(grad_out.shape()) + ", expected " + to_string(expected));
  }
  const auto n_in = static_cast<Eigen::Index>(in_units());
  const auto n_out = static_cast<Eigen::Index>(out_units());
  const ConstRowMap x(cached_input_.data(), static_cast<Eigen::Index>(batch), n_in);
  const ConstRowMap g(grad_out.data(), static_cast<Eigen::Index>(batch), n_out);
  const ConstRowMap w(weights_.data(), n_out, n_in);

  DenseGradients grads{Tensor(cached_input_.shape()), Tensor(weights_.shape()), Tensor(bias_.shape())};
  RowMap gx(grads.input.data(), static_cast<Eigen::Index>(batch), n_in);
  gx.noalias() = g * w;
  RowMap gw(grads.weights.data(), n_out, n_in);
  gw.noalias() = g.transpose() * x;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < out_units(); ++o) grads.bias[o] += grad_out[b * out_units() + o];
  return grads;
}

// ---------------------------------------------------------------------------
// Activations and pooling

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (double& x : out.values()) x = x > 0.0 ? x : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& cached_input) {
  if (grad_out.shape() != cached_input.shape()) {
    throw ShapeError("relu_backward: grad shape " + to_string(grad_out.shape()) + " vs input " +
                     to_string(cached_input.shape()));
  }
  Tensor out(grad_out.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cached_input[i] > 0.0 ? grad_out[i] : 0.0;
  return out;
}

PoolSpec::PoolSpec(std::size_t size) : PoolSpec(size, size) {}

PoolSpec::PoolSpec(std::size_t size, std::size_t stride_) : pool_size(size), stride(stride_) {
  if (pool_size == 0) throw ConfigError("pool size must be positive");
  if (stride != pool_size) throw ConfigError("pool stride must equal pool size");
}

PoolResult maxpool_forward(const PoolSpec& spec, const Tensor& input) {
  const SeqDims d = seq_dims(input, "maxpool_forward");
  if (d.length < spec.pool_size) {
    throw ShapeError("maxpool_forward: length " + std::to_string(d.length) + " shorter than pool size " +
                     std::to_string(spec.pool_size));
  }
  const std::size_t out_len = d.length / spec.pool_size;
  PoolResult result;
  result.output = Tensor(seq_shape(d.batched, d.batch, d.channels, out_len));
  result.indices.input_shape = input.shape();
  result.indices.output_shape = result.output.shape();
  result.indices.argmax.resize(result.output.size());

  const std::size_t rows = d.batch * d.channels;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = input.data() + r * d.length;
    for (std::size_t w = 0; w < out_len; ++w) {
      const std::size_t start = w * spec.stride;
      std::size_t best = start;
      for (std::size_t t = start + 1; t < start + spec.pool_size; ++t)
        if (src[t] > src[best]) best = t;
      result.output[r * out_len + w] = src[best];
      result.indices.argmax[r * out_len + w] = r * d.length + best;
    }
  }
  return result;
}

Tensor maxpool_backward(const Tensor& grad_out, const PoolIndices& indices) {
  if (indices.argmax.empty() || grad_out.shape() != indices.output_shape ||
      indices.argmax.size() != grad_out.size()) {
    throw StateError("maxpool_backward: pooling indices do not belong to a forward pass producing " +
                     to_string(grad_out.shape()));
  }
  Tensor grad_in(indices.input_shape);
  for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[indices.argmax[i]] += grad_out[i];
  return grad_in;
}

Tensor gap_forward(const Tensor& input) {
  const SeqDims d = seq_dims(input, "gap_forward");
  Tensor out(d.batched ? Shape{d.batch, d.channels} : Shape{d.channels});
  const double inv = 1.0 / static_cast<double>(d.length);
  for (std::size_t r = 0; r < d.batch * d.channels; ++r) {
    const double* src = input.data() + r * d.length;
    double acc = 0.0;
    for (std::size_t t = 0; t < d.length; ++t) acc += src[t];
    out[r] = acc * inv;
  }
  return out;
}

Tensor gap_backward(const Tensor& grad_out, std::size_t length) {
  if (length == 0) throw ShapeError("gap_backward: length must be positive");
  if (grad_out.rank() != 1 && grad_out.rank() != 2) throw ShapeError("gap_backward: expected [C] or [B,C]");
  Shape shape = grad_out.shape();
  shape.push_back(length);
  Tensor grad_in(shape);
  const double inv = 1.0 / static_cast<double>(length);
  for (std::size_t r = 0; r < grad_out.size(); ++r) {
    const double g = grad_out[r] * inv;
    std::fill(grad_in.data() + r * length, grad_in.data() + (r + 1) * length, g);
  }
  return grad_in;
}

Tensor softmax(const Tensor& input) {
  if (input.rank() != 1 && input.rank() != 2) throw ShapeError("softmax expects a vector or [B, M] matrix");
  const std::size_t m = input.dim(input.rank() - 1);
  const std::size_t rows = input.size() / m;
  Tensor out(input.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = input.data() + r * m;
    double* y = out.data() + r * m;
    const double peak = *std::max_element(x, x + m);
    double total = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      y[c] = std::exp(x[c] - peak);
      total += y[c];
    }
    for (std::size_t c = 0; c < m; ++c) y[c] /= total;
  }
  return out;
}

}  // namespace pecnet
