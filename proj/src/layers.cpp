// SPDX-License-Identifier: Apache-2.0
#include <bpnet/layers.hpp>

#include <cmath>

#include <bpnet/error.hpp>

namespace bpnet::nn {

std::size_t receptive_field_single(std::size_t kernel_size, std::size_t dilation) {
  require(kernel_size >= 1 && dilation >= 1, "kernel size and dilation must be >= 1");
  return kernel_size + (kernel_size - 1) * (dilation - 1);
}

std::vector<double> weight_norm_materialize(std::span<const double> direction, double gain) {
  double sq = 0.0;
  for (double v : direction)
    sq += v * v;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0))
    fail(ErrorKind::Numeric, "degenerate direction");
  std::vector<double> w(direction.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = gain * direction[i] / norm;
  return w;
}

Conv1dLayer::Conv1dLayer(std::size_t in_channels, std::size_t out_channels,
                         std::size_t kernel_size, std::size_t dilation)
    : in_(in_channels), out_(out_channels), kernel_(kernel_size), dilation_(dilation) {
  require(in_ >= 1 && out_ >= 1, "conv channel counts must be >= 1");
  require(kernel_ >= 1 && dilation_ >= 1, "kernel size and dilation must be >= 1");
  v_ = parameter(Tensor({out_, in_, kernel_}, 0.0));
  g_ = parameter(Tensor({out_, 1, 1}, 0.0));
  b_ = parameter(Tensor({out_, 1, 1}, 0.0));
}

Conv1dLayer::Conv1dLayer(const Conv1dLayer &other)
    : in_(other.in_), out_(other.out_), kernel_(other.kernel_), dilation_(other.dilation_) {
  if (other.v_) {
    v_ = parameter(other.v_->value);
    g_ = parameter(other.g_->value);
    b_ = parameter(other.b_->value);
  }
}

Conv1dLayer &Conv1dLayer::operator=(const Conv1dLayer &other) {
  if (this != &other) {
    Conv1dLayer copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Conv1dLayer::initialize(std::mt19937_64 &rng) {
  const std::size_t fan_in = in_ * kernel_;
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor &v = v_->value;
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = (2.0 * unit_uniform(rng()) - 1.0) * limit;
  for (std::size_t o = 0; o < out_; ++o) {
    double sq = 0.0;
    for (std::size_t k = 0; k < fan_in; ++k)
      sq += v[o * fan_in + k] * v[o * fan_in + k];
    g_->value[o] = std::sqrt(sq);
  }
  b_->value.fill(0.0);
}

Var Conv1dLayer::forward(Graph &g, const Var &x) const {
  const Var w = weight_norm(g, v_, g_);
  return causal_conv1d(g, x, w, b_, dilation_);
}

Tensor Conv1dLayer::effective_weight() const {
  const std::size_t fan = in_ * kernel_;
  Tensor w(v_->value.shape());
  for (std::size_t o = 0; o < out_; ++o) {
    const auto row = weight_norm_materialize(
        std::span<const double>(v_->value.data() + o * fan, fan), g_->value[o]);
    std::copy(row.begin(), row.end(), w.data() + o * fan);
  }
  return w;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState &state, double lr) {
  if (params.size() != grads.size())
    fail(ErrorKind::InvalidArgument, "adam: " + std::to_string(params.size()) +
                                         " parameters but " + std::to_string(grads.size()) +
                                         " gradients");
  if (state.first_moment.empty() && state.second_moment.empty()) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
    fail(ErrorKind::InvalidArgument, "adam: optimizer state does not match parameter shape");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double &m = state.first_moment[i];
    double &v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

AdamOptimizer::AdamOptimizer(std::vector<Var> params)
    : params_(std::move(params)), states_(params_.size()) {}

void AdamOptimizer::zero_grad() {
  for (auto &p : params_)
    if (!p->grad.empty())
      p->grad.fill(0.0);
}

void AdamOptimizer::step(double lr) {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Node &p = *params_[k];
    const Tensor &grad = p.grad_buffer();
    adam_step(p.value.values(), grad.values(), states_[k], lr);
  }
}

} // namespace bpnet::nn
