// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bpnet::nn {

/// Three-axis shape. Activations use [batch, channels, time]; convolution
/// kernels reuse the same container as [out, in, taps].
using Shape = std::array<std::size_t, 3>;

std::string to_string(const Shape &shape);

/// Dense row-major array of doubles.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape &shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double *data() noexcept { return data_.data(); }
  const double *data() const noexcept { return data_.data(); }

  double &operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double &at(std::size_t i0, std::size_t i1, std::size_t i2) noexcept {
    return data_[(i0 * shape_[1] + i1) * shape_[2] + i2];
  }
  double at(std::size_t i0, std::size_t i1, std::size_t i2) const noexcept {
    return data_[(i0 * shape_[1] + i1) * shape_[2] + i2];
  }

  /// Contiguous innermost row (i0, i1, :).
  std::span<double> row(std::size_t i0, std::size_t i1) noexcept {
    return {data_.data() + (i0 * shape_[1] + i1) * shape_[2], shape_[2]};
  }
  std::span<const double> row(std::size_t i0, std::size_t i1) const noexcept {
    return {data_.data() + (i0 * shape_[1] + i1) * shape_[2], shape_[2]};
  }

  void fill(double value);
  bool all_finite() const noexcept;

private:
  Shape shape_{0, 0, 0};
  std::vector<double> data_;
};

std::size_t element_count(const Shape &shape);

} // namespace bpnet::nn
