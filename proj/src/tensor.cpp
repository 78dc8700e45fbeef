#include "pecnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pecnet/errors.hpp"

namespace pecnet {

namespace {

std::size_t checked_count(const Shape& shape) {
  if (shape.empty() || shape.size() > Tensor::kMaxRank) {
    throw ShapeError("tensor rank must be 1.." + std::to_string(Tensor::kMaxRank) + ", got " +
                     std::to_string(shape.size()));
  }
  std::size_t count = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("zero-sized dimension in shape " + to_string(shape));
    count *= d;
  }
  return count;
}

}  // namespace

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(checked_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (checked_count(shape_) != data_.size()) {
    throw ShapeError("shape " + to_string(shape_) + " does not match " + std::to_string(data_.size()) +
                     " values");
  }
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& row : rows) {
    if (row.size() != cols) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({rows.size(), cols}, std::move(data));
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Tensor tensor_new(const Shape& shape, double fill) { return Tensor(shape, fill); }

Tensor elementwise(const Tensor& a, const Tensor& b, ElementwiseOp op) {
  if (a.shape() != b.shape()) {
    throw ShapeError("elementwise shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  Tensor out(a.shape());
  const std::size_t n = a.size();
  switch (op) {
    case ElementwiseOp::kAdd:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
      break;
    case ElementwiseOp::kSub:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
      break;
    case ElementwiseOp::kMul:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
      break;
  }
  return out;
}

Tensor matvec(const Tensor& m, const Tensor& v) {
  if (m.rank() != 2 || v.rank() != 1) throw ShapeError("matvec expects a matrix and a vector");
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  if (cols != v.dim(0)) {
    throw ShapeError("matvec inner dimension mismatch " + to_string(m.shape()) + " x " + to_string(v.shape()));
  }
  Tensor out({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += m.at(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

Tensor scaled(const Tensor& a, double factor) {
  Tensor out = a;
  for (double& x : out.values()) x *= factor;
  return out;
}

double sum(const Tensor& a) { return std::accumulate(a.values().begin(), a.values().end(), 0.0); }

}  // namespace pecnet
