// SPDX-License-Identifier: Apache-2.0
#include <bpnet/autograd.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include <bpnet/error.hpp>

namespace bpnet::nn {

Tensor &Node::grad_buffer() {
  if (grad.empty() && !value.empty())
    grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return node;
}

Var parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return node;
}

Var Graph::record(Tensor value, std::vector<Var> inputs,
                  std::function<void(Node &)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                    [](const Var &v) { return v->requires_grad; });
  node->inputs = std::move(inputs);
  node->backward = std::move(backward);
  tape_.push_back(node);
  return node;
}

bool Graph::contains(const Node *node) const noexcept {
  return std::any_of(tape_.begin(), tape_.end(),
                     [node](const Var &v) { return v.get() == node; });
}

void Graph::backward(const Var &loss, double seed) {
  if (tape_.empty() || !loss || !contains(loss.get()))
    fail(ErrorKind::InvalidArgument, "backward called before a forward pass was recorded");
  if (loss->value.size() != 1)
    fail(ErrorKind::InvalidArgument, "loss must be a scalar");

  loss->grad_buffer().fill(seed);
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
    Node &node = **it;
    if (!node.requires_grad || node.grad.empty() || !node.backward)
      continue;
    node.backward(node);
  }
}

namespace {

// Four independent partial sums; the fixed summation order keeps results
// reproducible while letting the compiler pipeline the multiplies.
double dot(const double *a, const double *b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t p = 0;
  for (; p + 4 <= n; p += 4) {
    s0 += a[p] * b[p];
    s1 += a[p + 1] * b[p + 1];
    s2 += a[p + 2] * b[p + 2];
    s3 += a[p + 3] * b[p + 3];
  }
  for (; p < n; ++p)
    s0 += a[p] * b[p];
  return (s0 + s1) + (s2 + s3);
}

void check_same_shape(const Tensor &a, const Tensor &b, const char *op) {
  if (a.shape() != b.shape())
    fail(ErrorKind::InvalidArgument, std::string(op) + ": shape mismatch " +
                                         to_string(a.shape()) + " vs " + to_string(b.shape()));
}

} // namespace

Var causal_conv1d(Graph &g, const Var &x, const Var &weight, const Var &bias,
                  std::size_t dilation) {
  const auto [batch, in_ch, time] = x->value.shape();
  const auto [out_ch, w_in, taps] = weight->value.shape();
  if (dilation < 1 || taps < 1)
    fail(ErrorKind::InvalidArgument, "conv: kernel size and dilation must be >= 1");
  if (w_in != in_ch)
    fail(ErrorKind::InvalidArgument, "conv: input has " + std::to_string(in_ch) +
                                         " channels, kernel expects " + std::to_string(w_in));
  if (bias->value.shape() != Shape{out_ch, 1, 1})
    fail(ErrorKind::InvalidArgument, "conv: bias shape " + to_string(bias->value.shape()));
  if (time < 1)
    fail(ErrorKind::InvalidArgument, "conv: empty time axis");

  const Tensor &xv = x->value;
  const Tensor &wv = weight->value;
  Tensor y({batch, out_ch, time});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out_ch; ++o) {
      auto yrow = y.row(b, o);
      std::fill(yrow.begin(), yrow.end(), bias->value[o]);
      for (std::size_t c = 0; c < in_ch; ++c) {
        const auto xrow = xv.row(b, c);
        for (std::size_t i = 0; i < taps; ++i) {
          const std::size_t shift = dilation * i;
          if (shift >= time)
            break;
          const double w = wv.at(o, c, i);
          const double *src = xrow.data();
          double *dst = yrow.data() + shift;
          const std::size_t n = time - shift;
          for (std::size_t p = 0; p < n; ++p)
            dst[p] += w * src[p];
        }
      }
    }
  }

  return g.record(std::move(y), {x, weight, bias}, [dilation](Node &self) {
    Node &xn = *self.inputs[0];
    Node &wn = *self.inputs[1];
    Node &bn = *self.inputs[2];
    const Tensor &dy = self.grad;
    const auto [batch, in_ch, time] = xn.value.shape();
    const auto [out_ch, w_in, taps] = wn.value.shape();
    (void)w_in;

    if (bn.requires_grad) {
      Tensor &db = bn.grad_buffer();
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < out_ch; ++o)
          for (double v : dy.row(b, o))
            db[o] += v;
    }
    if (wn.requires_grad) {
      Tensor &dw = wn.grad_buffer();
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < out_ch; ++o) {
          const double *gy = dy.row(b, o).data();
          for (std::size_t c = 0; c < in_ch; ++c) {
            const double *src = xn.value.row(b, c).data();
            for (std::size_t i = 0; i < taps; ++i) {
              const std::size_t shift = dilation * i;
              if (shift >= time)
                break;
              dw.at(o, c, i) += dot(gy + shift, src, time - shift);
            }
          }
        }
    }
    if (xn.requires_grad) {
      Tensor &dx = xn.grad_buffer();
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < out_ch; ++o) {
          const double *gy = dy.row(b, o).data();
          for (std::size_t c = 0; c < in_ch; ++c) {
            double *dst = dx.row(b, c).data();
            for (std::size_t i = 0; i < taps; ++i) {
              const std::size_t shift = dilation * i;
              if (shift >= time)
                break;
              const double w = wn.value.at(o, c, i);
              for (std::size_t p = 0; p < time - shift; ++p)
                dst[p] += w * gy[p + shift];
            }
          }
        }
    }
  });
}

Var weight_norm(Graph &g, const Var &direction, const Var &gain) {
  const auto [out_ch, in_ch, taps] = direction->value.shape();
  if (gain->value.shape() != Shape{out_ch, 1, 1})
    fail(ErrorKind::InvalidArgument, "weight_norm: gain shape " + to_string(gain->value.shape()));
  const std::size_t fan = in_ch * taps;

  std::vector<double> norms(out_ch);
  Tensor w(direction->value.shape());
  for (std::size_t o = 0; o < out_ch; ++o) {
    const double *v = direction->value.data() + o * fan;
    double sq = 0.0;
    for (std::size_t k = 0; k < fan; ++k)
      sq += v[k] * v[k];
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0))
      fail(ErrorKind::Numeric, "degenerate direction");
    norms[o] = norm;
    const double scale = gain->value[o] / norm;
    for (std::size_t k = 0; k < fan; ++k)
      w[o * fan + k] = scale * v[k];
  }

  return g.record(std::move(w), {direction, gain},
                  [norms = std::move(norms), fan](Node &self) {
    Node &vn = *self.inputs[0];
    Node &gn = *self.inputs[1];
    const std::size_t out_ch = norms.size();
    for (std::size_t o = 0; o < out_ch; ++o) {
      const double *v = vn.value.data() + o * fan;
      const double *dw = self.grad.data() + o * fan;
      const double norm = norms[o];
      // projection of dL/dw onto the unit direction
      double proj = 0.0;
      for (std::size_t k = 0; k < fan; ++k)
        proj += dw[k] * v[k];
      proj /= norm;
      if (gn.requires_grad)
        gn.grad_buffer()[o] += proj;
      if (vn.requires_grad) {
        double *dv = vn.grad_buffer().data() + o * fan;
        const double scale = gn.value[o] / norm;
        for (std::size_t k = 0; k < fan; ++k)
          dv[k] += scale * (dw[k] - proj * v[k] / norm);
      }
    }
  });
}

double elu_value(double x) { return x > 0.0 ? x : std::expm1(x); }

Var elu(Graph &g, const Var &x) {
  Tensor y(x->value.shape());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = elu_value(x->value[i]);
  return g.record(std::move(y), {x}, [](Node &self) {
    Node &xn = *self.inputs[0];
    Tensor &dx = xn.grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double xi = xn.value[i];
      dx[i] += self.grad[i] * (xi > 0.0 ? 1.0 : self.value[i] + 1.0);
    }
  });
}

double unit_uniform(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

Var dropout(Graph &g, const Var &x, double rate, bool training, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0))
    fail(ErrorKind::InvalidArgument, "dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0)
    return x;

  std::mt19937_64 rng(seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x->value.size());
  Tensor y(x->value.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = unit_uniform(rng()) < rate ? 0.0 : keep_scale;
    y[i] = x->value[i] * mask[i];
  }
  return g.record(std::move(y), {x}, [mask = std::move(mask)](Node &self) {
    Tensor &dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i)
      dx[i] += self.grad[i] * mask[i];
  });
}

Var add(Graph &g, const Var &a, const Var &b) {
  check_same_shape(a->value, b->value, "add");
  Tensor y(a->value.shape());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = a->value[i] + b->value[i];
  return g.record(std::move(y), {a, b}, [](Node &self) {
    for (auto &in : self.inputs) {
      if (!in->requires_grad)
        continue;
      Tensor &d = in->grad_buffer();
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] += self.grad[i];
    }
  });
}

Var concat_channels(Graph &g, const Var &a, const Var &b) {
  const auto [batch, ca, time] = a->value.shape();
  const auto [batch_b, cb, time_b] = b->value.shape();
  if (batch != batch_b || time != time_b)
    fail(ErrorKind::InvalidArgument, "concat: shape mismatch " + to_string(a->value.shape()) +
                                         " vs " + to_string(b->value.shape()));
  Tensor y({batch, ca + cb, time});
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < ca; ++c)
      std::copy_n(a->value.row(n, c).data(), time, y.row(n, c).data());
    for (std::size_t c = 0; c < cb; ++c)
      std::copy_n(b->value.row(n, c).data(), time, y.row(n, ca + c).data());
  }
  return g.record(std::move(y), {a, b}, [ca](Node &self) {
    const auto [batch, channels, time] = self.value.shape();
    for (std::size_t part = 0; part < 2; ++part) {
      Node &in = *self.inputs[part];
      if (!in.requires_grad)
        continue;
      Tensor &d = in.grad_buffer();
      const std::size_t first = part == 0 ? 0 : ca;
      const std::size_t count = part == 0 ? ca : channels - ca;
      for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t c = 0; c < count; ++c) {
          const double *src = self.grad.row(n, first + c).data();
          double *dst = d.row(n, c).data();
          for (std::size_t t = 0; t < time; ++t)
            dst[t] += src[t];
        }
    }
  });
}

Var mse_loss(Graph &g, const Var &pred, const Tensor &target) {
  check_same_shape(pred->value, target, "mse_loss");
  const std::size_t n = target.size();
  if (n == 0)
    fail(ErrorKind::InvalidArgument, "mse_loss: empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred->value[i] - target[i];
    acc += d * d;
  }
  Tensor loss({1, 1, 1}, acc / static_cast<double>(n));
  return g.record(std::move(loss), {pred}, [target](Node &self) {
    Node &pn = *self.inputs[0];
    Tensor &dp = pn.grad_buffer();
    const double scale = 2.0 * self.grad[0] / static_cast<double>(target.size());
    for (std::size_t i = 0; i < dp.size(); ++i)
      dp[i] += scale * (pn.value[i] - target[i]);
  });
}

Var sum(Graph &g, const Var &x) {
  double acc = 0.0;
  for (double v : x->value.values())
    acc += v;
  return g.record(Tensor({1, 1, 1}, acc), {x}, [](Node &self) {
    Tensor &dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i)
      dx[i] += self.grad[0];
  });
}

} // namespace bpnet::nn
