// SPDX-License-Identifier: Apache-2.0
/**
 * @file   train.hpp
 * @brief  Cyclic learning-rate schedule, mini-batch Adam training and
 *         sliding-window inference in mmHg.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <bpnet/dataset.hpp>
#include <bpnet/model.hpp>

namespace bpnet::train {

using data::WindowedExample;
using model::BPNetModel;
using nn::Tensor;

struct TrainConfig {
  double base_lr = 0.001;
  std::size_t cycle_len_epochs = 100;
  std::size_t halving_period_epochs = 20;
  double cycle_boundary_multiplier = 14.4;
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  std::string loss = "mse";
  std::uint64_t rng_seed = 0;

  bool operator==(const TrainConfig &) const = default;
};

void validate(const TrainConfig &config);

/// Within a cycle the rate halves every `halving_period_epochs`; each new
/// cycle starts at the previous cycle's last rate times the multiplier
/// (0.001 / 16 * 14.4 = 0.0009 with the defaults).
double lr_at_epoch(std::size_t epoch, const TrainConfig &config);

struct LossValue {
  double loss = 0.0;
  Tensor grad; ///< d loss / d pred
};

/// mean((pred - target)^2) and its gradient 2 (pred - target) / N.
LossValue mse_loss(const Tensor &pred, const Tensor &target);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double valid_loss = 0.0; ///< NaN when no validation windows exist
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

/// `epoch,lr,train_loss,valid_loss`, one row per epoch.
std::string format_history(const TrainHistory &history);

struct TrainOptions {
  std::size_t start_epoch = 0; ///< resume offset into the schedule
  std::function<void(const EpochRecord &)> on_epoch;
};

struct TrainResult {
  TrainHistory history;
  std::optional<BPNetModel> best_model; ///< lowest validation loss seen
  std::size_t best_epoch = 0;
  double best_valid_loss = 0.0;
};

/// Stacks windows into ([b,1,T] ecg, [b,1,T] ppg, [b,2,T] target).
struct Batch {
  Tensor ecg, ppg, target;
};
Batch make_batch(const std::vector<WindowedExample> &windows,
                 const std::vector<std::size_t> &indices);

/// Mean element-wise MSE of inference-mode predictions.
double evaluate_loss(const BPNetModel &model, const std::vector<WindowedExample> &windows,
                     std::size_t batch_size);

/// Trains `model` in place for config.epochs epochs starting at
/// options.start_epoch. Epoch e shuffles with seed rng_seed + e.
TrainResult train(BPNetModel &model, const std::vector<WindowedExample> &train_windows,
                  const std::vector<WindowedExample> &valid_windows, const TrainConfig &config,
                  const TrainOptions &options = {});

struct Prediction {
  std::vector<double> sbp, dbp; ///< mmHg
};

/// Predicts every sample of `segment`. Output chunks do not overlap; each
/// chunk's input is prefixed with up to receptive_field - 1 earlier samples
/// of the record so that every output sees its full history when available.
Prediction predict(const BPNetModel &model, const data::SubjectRecord &record,
                   const data::Segment &segment, std::size_t window_len);

} // namespace bpnet::train
