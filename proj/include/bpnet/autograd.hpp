// SPDX-License-Identifier: Apache-2.0
/**
 * @file   autograd.hpp
 * @brief  Tape-based reverse-mode differentiation over Tensor values.
 *
 * A Graph records every operation applied during one forward pass, in
 * execution order, so the tape is already a topological order. backward()
 * walks it in reverse. Parameters are leaf variables that outlive any single
 * graph; their gradients accumulate until cleared.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <bpnet/tensor.hpp>

namespace bpnet::nn {

struct Node {
  Tensor value;
  Tensor grad; ///< allocated lazily; empty means "no gradient reached here"
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node &)> backward;
  bool requires_grad = false;

  /// Returns the gradient buffer, zero-initialised on first use.
  Tensor &grad_buffer();
};

using Var = std::shared_ptr<Node>;

/// Leaf that does not receive gradients (inputs, targets).
Var constant(Tensor value);

/// Leaf that receives gradients (trainable weights).
Var parameter(Tensor value);

class Graph {
public:
  /// Appends an op node; `inputs` must already exist.
  Var record(Tensor value, std::vector<Var> inputs,
             std::function<void(Node &)> backward);

  std::size_t size() const noexcept { return tape_.size(); }
  bool contains(const Node *node) const noexcept;

  /// Seeds d(loss)/d(loss) = seed (loss must be a single element) and
  /// propagates to every node that influences it.
  void backward(const Var &loss, double seed = 1.0);

  void clear() noexcept { tape_.clear(); }

private:
  std::vector<Var> tape_;
};

// Operations. All tensors are [batch, channels, time] unless noted.

/// y[b,o,p] = bias[o] + sum_{c,i} w[o,c,i] * x[b,c,p - dilation*i],
/// zero for negative time (left padding of (R-1)*dilation).
/// weight is [out, in, R]; bias is [out, 1, 1].
Var causal_conv1d(Graph &g, const Var &x, const Var &weight, const Var &bias,
                  std::size_t dilation);

/// w[o,:,:] = gain[o] * v[o,:,:] / ||v[o,:,:]||. v is [out, in, R], gain [out, 1, 1].
Var weight_norm(Graph &g, const Var &direction, const Var &gain);

Var elu(Graph &g, const Var &x);

/// Inverted dropout. Identity when !training or rate == 0.
Var dropout(Graph &g, const Var &x, double rate, bool training, std::uint64_t seed);

Var add(Graph &g, const Var &a, const Var &b);

/// Channel-wise concatenation of two [b, c_i, T] tensors.
Var concat_channels(Graph &g, const Var &a, const Var &b);

/// mean((pred - target)^2) as a [1,1,1] node.
Var mse_loss(Graph &g, const Var &pred, const Tensor &target);

/// Sum of all elements as a [1,1,1] node.
Var sum(Graph &g, const Var &x);

// Plain tensor kernels, shared with tests and non-recording callers.

double elu_value(double x);

/// Deterministic uniform double in [0, 1) from a 64-bit engine output.
double unit_uniform(std::uint64_t bits);

} // namespace bpnet::nn
