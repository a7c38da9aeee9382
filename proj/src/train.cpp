// SPDX-License-Identifier: Apache-2.0
#include <bpnet/train.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include <bpnet/error.hpp>
#include <bpnet/layers.hpp>
#include <bpnet/signal.hpp>

namespace bpnet::train {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void shuffle(std::vector<std::size_t> &order, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(engine() % i);
    std::swap(order[i - 1], order[j]);
  }
}

} // namespace

void validate(const TrainConfig &c) {
  require(c.base_lr > 0.0 && std::isfinite(c.base_lr), "base_lr must be > 0");
  require(c.batch_size >= 1, "batch_size must be >= 1");
  require(c.halving_period_epochs >= 1, "halving_period_epochs must be >= 1");
  require(c.cycle_len_epochs >= c.halving_period_epochs,
          "cycle_len_epochs must be >= halving_period_epochs");
  require(c.cycle_boundary_multiplier > 0.0, "cycle_boundary_multiplier must be > 0");
  require(c.loss == "mse", "loss must be \"mse\"");
}

double lr_at_epoch(std::size_t epoch, const TrainConfig &c) {
  validate(c);
  const std::size_t halvings_per_cycle = (c.cycle_len_epochs - 1) / c.halving_period_epochs;
  const double boundary =
      c.cycle_boundary_multiplier / std::ldexp(1.0, static_cast<int>(halvings_per_cycle));
  double lr = c.base_lr;
  for (std::size_t k = 0; k < epoch / c.cycle_len_epochs; ++k)
    lr *= boundary;
  const std::size_t within = (epoch % c.cycle_len_epochs) / c.halving_period_epochs;
  return std::ldexp(lr, -static_cast<int>(within));
}

LossValue mse_loss(const Tensor &pred, const Tensor &target) {
  if (pred.shape() != target.shape())
    fail(ErrorKind::InvalidArgument, "mse_loss: shape mismatch " + nn::to_string(pred.shape()) +
                                         " vs " + nn::to_string(target.shape()));
  require(!pred.empty(), "mse_loss: empty tensors");
  LossValue out{0.0, Tensor(pred.shape())};
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    out.loss += d * d;
    out.grad[i] = 2.0 * d / n;
  }
  out.loss /= n;
  return out;
}

std::string format_history(const TrainHistory &history) {
  std::string out = "epoch,lr,train_loss,valid_loss\n";
  char line[128];
  for (const auto &e : history.epochs) {
    std::snprintf(line, sizeof line, "%zu,%.10g,%.10g,%.10g\n", e.epoch, e.lr, e.train_loss,
                  e.valid_loss);
    out += line;
  }
  return out;
}

Batch make_batch(const std::vector<WindowedExample> &windows,
                 const std::vector<std::size_t> &indices) {
  require(!indices.empty(), "empty batch");
  const std::size_t t = windows[indices.front()].ecg.size();
  const std::size_t b = indices.size();
  Batch batch{Tensor({b, 1, t}), Tensor({b, 1, t}), Tensor({b, 2, t})};
  for (std::size_t k = 0; k < b; ++k) {
    const WindowedExample &w = windows[indices[k]];
    if (w.ecg.size() != t || w.ppg.size() != t || w.sbp_target.size() != t ||
        w.dbp_target.size() != t)
      fail(ErrorKind::InvalidArgument, "windows in one batch must share a length");
    std::copy(w.ecg.begin(), w.ecg.end(), batch.ecg.row(k, 0).begin());
    std::copy(w.ppg.begin(), w.ppg.end(), batch.ppg.row(k, 0).begin());
    std::copy(w.sbp_target.begin(), w.sbp_target.end(), batch.target.row(k, 0).begin());
    std::copy(w.dbp_target.begin(), w.dbp_target.end(), batch.target.row(k, 1).begin());
  }
  return batch;
}

double evaluate_loss(const BPNetModel &model, const std::vector<WindowedExample> &windows,
                     std::size_t batch_size) {
  if (windows.empty())
    return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0, count = 0.0;
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, windows.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const Batch batch = make_batch(windows, idx);
    const Tensor pred = model.infer(batch.ecg, batch.ppg);
    const auto n = static_cast<double>(pred.size());
    total += mse_loss(pred, batch.target).loss * n;
    count += n;
  }
  return total / count;
}

TrainResult train(BPNetModel &model, const std::vector<WindowedExample> &train_windows,
                  const std::vector<WindowedExample> &valid_windows, const TrainConfig &config,
                  const TrainOptions &options) {
  validate(config);
  if (train_windows.empty())
    fail(ErrorKind::Data, "empty training set");

  std::vector<nn::Var> params;
  for (const auto &p : model.parameters())
    params.push_back(p.var);
  nn::AdamOptimizer optimizer(params);

  TrainResult result;
  result.best_valid_loss = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train_windows.size());

  for (std::size_t e = 0; e < config.epochs; ++e) {
    const std::size_t epoch = options.start_epoch + e;
    const double lr = lr_at_epoch(epoch, config);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, config.rng_seed + epoch);

    double total = 0.0, count = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::vector<std::size_t> idx(
          order.begin() + static_cast<std::ptrdiff_t>(start),
          order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + config.batch_size)));
      const Batch batch = make_batch(train_windows, idx);

      nn::Graph g;
      model::ForwardOptions fo{true, mix(mix(config.rng_seed ^ epoch) + batch_index)};
      const nn::Var pred = model.forward(g, nn::constant(batch.ecg), nn::constant(batch.ppg), fo);
      const nn::Var loss = nn::mse_loss(g, pred, batch.target);
      const double value = loss->value[0];
      if (!std::isfinite(value))
        fail(ErrorKind::Numeric, "non-finite training loss at epoch " + std::to_string(epoch));

      optimizer.zero_grad();
      g.backward(loss);
      optimizer.step(lr);

      const auto n = static_cast<double>(pred->value.size());
      total += value * n;
      count += n;
    }

    EpochRecord record{epoch, lr, total / count,
                       evaluate_loss(model, valid_windows, config.batch_size)};
    if (!std::isfinite(record.train_loss))
      fail(ErrorKind::Numeric, "non-finite training loss at epoch " + std::to_string(epoch));
    if (std::isfinite(record.valid_loss) && record.valid_loss < result.best_valid_loss) {
      result.best_valid_loss = record.valid_loss;
      result.best_epoch = epoch;
      result.best_model = model;
    }
    result.history.epochs.push_back(record);
    if (options.on_epoch)
      options.on_epoch(record);
  }
  return result;
}

Prediction predict(const BPNetModel &model, const data::SubjectRecord &record,
                   const data::Segment &segment, std::size_t window_len) {
  require(window_len >= 1, "window length must be >= 1");
  require(segment.end <= record.size() && segment.begin <= segment.end, "segment exceeds record");

  const std::size_t context_max = model::receptive_field_total(model.config()) - 1;
  const std::size_t chunk = window_len > context_max ? window_len - context_max : window_len;

  Prediction out;
  out.sbp.reserve(segment.size());
  out.dbp.reserve(segment.size());
  for (std::size_t s = segment.begin; s < segment.end; s += chunk) {
    const std::size_t e = std::min(segment.end, s + chunk);
    const std::size_t context = window_len > context_max ? std::min(context_max, s) : 0;
    const std::size_t from = s - context;
    const std::size_t len = e - from;

    const auto input = [&](const std::vector<double> &x) {
      const auto normalized =
          signal::normalize_mu_law(std::span<const double>(x.data() + from, len));
      return Tensor({1, 1, len}, normalized);
    };
    const Tensor y = model.infer(input(record.ecg.samples), input(record.ppg.samples));
    for (std::size_t i = context; i < len; ++i) {
      out.sbp.push_back(model::denormalize_sbp(y.at(0, 0, i)));
      out.dbp.push_back(model::denormalize_dbp(y.at(0, 1, i)));
    }
  }
  return out;
}

} // namespace bpnet::train
