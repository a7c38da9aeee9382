// SPDX-License-Identifier: Apache-2.0
/**
 * @file   model.hpp
 * @brief  BP-Net: per-signal 1x1 stems, stacked dilated residual blocks and
 *         a two-channel head producing per-sample (SBP, DBP) estimates.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <bpnet/autograd.hpp>
#include <bpnet/layers.hpp>

namespace bpnet::model {

using nn::Conv1dLayer;
using nn::Graph;
using nn::Tensor;
using nn::Var;

struct ModelConfig {
  std::size_t kernel_size = 5;
  std::vector<std::size_t> dilations{1, 2, 4, 8, 16, 32};
  std::vector<std::size_t> block_channels{32, 32, 64, 64, 128, 256};
  std::size_t input_stem_channels = 32;
  std::size_t head_channels = 256;
  std::size_t output_channels = 2;
  double dropout_rate = 0.2;

  bool operator==(const ModelConfig &) const = default;
};

/// Throws InvalidArgument describing the first inconsistency.
void validate(const ModelConfig &config);

/// 1 + sum over blocks of 2 (R-1) L.
std::size_t receptive_field_total(const ModelConfig &config);

struct ResidualBlock {
  Conv1dLayer conv1;
  Conv1dLayer conv2;
  std::optional<Conv1dLayer> projection; ///< present iff in != out channels
  double dropout_rate = 0.0;

  std::size_t dilation() const noexcept { return conv1.dilation(); }
};

struct NamedParameter {
  std::string name;
  Var var;
};

struct ForwardOptions {
  bool training = false;
  std::uint64_t dropout_seed = 0;
};

class BPNetModel {
public:
  BPNetModel() = default;
  explicit BPNetModel(ModelConfig config); ///< shapes only, all-zero weights

  const ModelConfig &config() const noexcept { return config_; }

  /// ecg, ppg: [batch, 1, T]. Returns [batch, 2, T]; row 0 is normalised SBP,
  /// row 1 normalised DBP.
  Var forward(Graph &g, const Var &ecg, const Var &ppg,
              const ForwardOptions &options = {}) const;

  /// Inference-mode forward on plain tensors.
  Tensor infer(const Tensor &ecg, const Tensor &ppg) const;

  /// Every trainable tensor in a fixed order with stable names.
  std::vector<NamedParameter> parameters() const;
  std::size_t parameter_count() const;

  Conv1dLayer ecg_stem, ppg_stem;
  std::vector<ResidualBlock> blocks;
  Conv1dLayer head_conv1, head_conv2;

private:
  ModelConfig config_;
};

/// Deterministic construction and initialisation from `rng_seed`.
BPNetModel build_bpnet(const ModelConfig &config, std::uint64_t rng_seed);

/// Block output ELU(proj(x) + F(x)) with F = drop(ELU(conv2(drop(ELU(conv1(x)))))).
Var residual_forward(Graph &g, const ResidualBlock &block, const Var &x,
                     const ForwardOptions &options, std::uint64_t site);

// Target scaling. Targets are mapped to [0, 1] with fixed physiological
// bounds before the loss and mapped back for reporting.
inline constexpr double kSbpMin = 50.0, kSbpMax = 220.0;
inline constexpr double kDbpMin = 30.0, kDbpMax = 150.0;

double normalize_sbp(double mmhg);
double denormalize_sbp(double unit);
double normalize_dbp(double mmhg);
double denormalize_dbp(double unit);

// Checkpoints: one JSON document with format tag, version, model config,
// optional training metadata and every parameter as decimal floats.
inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  std::size_t epochs_completed = 0;
  std::size_t window_len = 0;
  double sample_rate_hz = 125.0;
};

void save_checkpoint(const BPNetModel &model, const std::filesystem::path &path,
                     const CheckpointMeta &meta = {});
BPNetModel load_checkpoint(const std::filesystem::path &path, CheckpointMeta *meta = nullptr);

std::string checkpoint_to_string(const BPNetModel &model, const CheckpointMeta &meta = {});
BPNetModel checkpoint_from_string(const std::string &text, CheckpointMeta *meta = nullptr);

} // namespace bpnet::model
