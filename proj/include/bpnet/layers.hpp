// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <bpnet/autograd.hpp>

namespace bpnet::nn {

/// Receptive field of one dilated kernel: R + (R-1)(L-1).
std::size_t receptive_field_single(std::size_t kernel_size, std::size_t dilation);

/// g * v / ||v||_2. Throws "degenerate direction" for a zero vector.
std::vector<double> weight_norm_materialize(std::span<const double> direction, double gain);

/// Weight-normalised dilated causal convolution. The trainable parameters are
/// the direction v [out, in, R], the per-channel gain g and the bias.
class Conv1dLayer {
public:
  Conv1dLayer() = default;
  Conv1dLayer(std::size_t in_channels, std::size_t out_channels,
              std::size_t kernel_size, std::size_t dilation);

  // Copies own fresh parameter nodes holding the same values.
  Conv1dLayer(const Conv1dLayer &other);
  Conv1dLayer &operator=(const Conv1dLayer &other);
  Conv1dLayer(Conv1dLayer &&) noexcept = default;
  Conv1dLayer &operator=(Conv1dLayer &&) noexcept = default;

  /// He-uniform direction, gain = ||v|| per output channel, zero bias.
  void initialize(std::mt19937_64 &rng);

  Var forward(Graph &g, const Var &x) const;

  /// Effective kernel w = g v / ||v||.
  Tensor effective_weight() const;

  std::size_t in_channels() const noexcept { return in_; }
  std::size_t out_channels() const noexcept { return out_; }
  std::size_t kernel_size() const noexcept { return kernel_; }
  std::size_t dilation() const noexcept { return dilation_; }
  /// Zero samples prepended on the left so output length equals input length.
  std::size_t left_padding() const noexcept { return (kernel_ - 1) * dilation_; }

  const Var &direction() const noexcept { return v_; }
  const Var &gain() const noexcept { return g_; }
  const Var &bias() const noexcept { return b_; }

private:
  std::size_t in_ = 0, out_ = 0, kernel_ = 1, dilation_ = 1;
  Var v_, g_, b_;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update of `params` in place. Lazily sizes the
/// moment buffers on first use.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState &state, double lr);

/// Adam over a fixed list of parameter variables.
class AdamOptimizer {
public:
  explicit AdamOptimizer(std::vector<Var> params);

  void zero_grad();
  void step(double lr);

  const std::vector<AdamState> &states() const noexcept { return states_; }

private:
  std::vector<Var> params_;
  std::vector<AdamState> states_;
};

} // namespace bpnet::nn
