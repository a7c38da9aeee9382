// SPDX-License-Identifier: Apache-2.0
#include <bpnet/tensor.hpp>

#include <algorithm>
#include <cmath>

#include <bpnet/error.hpp>

namespace bpnet::nn {

std::string to_string(const Shape &shape) {
  return "[" + std::to_string(shape[0]) + "," + std::to_string(shape[1]) + "," +
         std::to_string(shape[2]) + "]";
}

std::size_t element_count(const Shape &shape) {
  return shape[0] * shape[1] * shape[2];
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(shape), data_(element_count(shape), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), data_(std::move(values)) {
  if (data_.size() != element_count(shape_))
    fail(ErrorKind::InvalidArgument, "tensor data length " + std::to_string(data_.size()) +
                                         " does not match shape " + to_string(shape_));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

} // namespace bpnet::nn
