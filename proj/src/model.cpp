// SPDX-License-Identifier: Apache-2.0
#include <bpnet/model.hpp>

#include <random>

#include <bpnet/error.hpp>

namespace bpnet::model {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t site_seed(std::uint64_t seed, std::uint64_t site) {
  return splitmix64(seed ^ splitmix64(site));
}

void append(std::vector<NamedParameter> &out, const std::string &prefix,
            const Conv1dLayer &layer) {
  out.push_back({prefix + ".v", layer.direction()});
  out.push_back({prefix + ".g", layer.gain()});
  out.push_back({prefix + ".b", layer.bias()});
}

} // namespace

void validate(const ModelConfig &c) {
  require(c.kernel_size >= 1, "kernel_size must be >= 1");
  require(!c.dilations.empty(), "dilations must not be empty");
  require(c.dilations.size() == c.block_channels.size(),
          "dilations and block_channels must have the same length");
  for (auto d : c.dilations)
    require(d >= 1, "dilations must be >= 1");
  for (auto ch : c.block_channels)
    require(ch >= 1, "block_channels must be >= 1");
  require(c.input_stem_channels >= 1, "input_stem_channels must be >= 1");
  require(c.head_channels >= 1, "head_channels must be >= 1");
  require(c.output_channels == 2, "output_channels must be 2 (SBP, DBP)");
  require(c.dropout_rate >= 0.0 && c.dropout_rate < 1.0, "dropout_rate must lie in [0, 1)");
}

std::size_t receptive_field_total(const ModelConfig &config) {
  validate(config);
  std::size_t field = 1;
  for (auto d : config.dilations)
    field += 2 * (config.kernel_size - 1) * d;
  return field;
}

BPNetModel::BPNetModel(ModelConfig config) : config_(std::move(config)) {
  validate(config_);
  const std::size_t r = config_.kernel_size;
  ecg_stem = Conv1dLayer(1, config_.input_stem_channels, 1, 1);
  ppg_stem = Conv1dLayer(1, config_.input_stem_channels, 1, 1);
  std::size_t in = 2 * config_.input_stem_channels;
  for (std::size_t k = 0; k < config_.dilations.size(); ++k) {
    const std::size_t out = config_.block_channels[k];
    const std::size_t l = config_.dilations[k];
    ResidualBlock block{Conv1dLayer(in, out, r, l), Conv1dLayer(out, out, r, l),
                        std::nullopt, config_.dropout_rate};
    if (in != out)
      block.projection = Conv1dLayer(in, out, 1, 1);
    blocks.push_back(std::move(block));
    in = out;
  }
  head_conv1 = Conv1dLayer(in, config_.head_channels, 1, 1);
  head_conv2 = Conv1dLayer(config_.head_channels, config_.output_channels, 1, 1);
}

std::vector<NamedParameter> BPNetModel::parameters() const {
  std::vector<NamedParameter> out;
  append(out, "ecg_stem", ecg_stem);
  append(out, "ppg_stem", ppg_stem);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const std::string p = "blocks." + std::to_string(k);
    append(out, p + ".conv1", blocks[k].conv1);
    append(out, p + ".conv2", blocks[k].conv2);
    if (blocks[k].projection)
      append(out, p + ".projection", *blocks[k].projection);
  }
  append(out, "head_conv1", head_conv1);
  append(out, "head_conv2", head_conv2);
  return out;
}

std::size_t BPNetModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto &p : parameters())
    n += p.var->value.size();
  return n;
}

Var residual_forward(Graph &g, const ResidualBlock &block, const Var &x,
                     const ForwardOptions &options, std::uint64_t site) {
  const double rate = block.dropout_rate;
  Var h = nn::elu(g, block.conv1.forward(g, x));
  h = nn::dropout(g, h, rate, options.training, site_seed(options.dropout_seed, 2 * site));
  h = nn::elu(g, block.conv2.forward(g, h));
  h = nn::dropout(g, h, rate, options.training, site_seed(options.dropout_seed, 2 * site + 1));
  const Var skip = block.projection ? block.projection->forward(g, x) : x;
  return nn::elu(g, nn::add(g, skip, h));
}

Var BPNetModel::forward(Graph &g, const Var &ecg, const Var &ppg,
                        const ForwardOptions &options) const {
  const auto &es = ecg->value.shape();
  const auto &ps = ppg->value.shape();
  if (es[1] != 1 || ps[1] != 1)
    fail(ErrorKind::InvalidArgument, "ecg and ppg must have exactly one channel");
  if (es != ps)
    fail(ErrorKind::InvalidArgument, "ecg/ppg length mismatch: " + nn::to_string(es) +
                                         " vs " + nn::to_string(ps));
  Var x = nn::concat_channels(g, ecg_stem.forward(g, ecg), ppg_stem.forward(g, ppg));
  for (std::size_t k = 0; k < blocks.size(); ++k)
    x = residual_forward(g, blocks[k], x, options, k);
  x = nn::elu(g, head_conv1.forward(g, x));
  return nn::elu(g, head_conv2.forward(g, x));
}

Tensor BPNetModel::infer(const Tensor &ecg, const Tensor &ppg) const {
  Graph g;
  const Var out = forward(g, nn::constant(ecg), nn::constant(ppg));
  return out->value;
}

BPNetModel build_bpnet(const ModelConfig &config, std::uint64_t rng_seed) {
  BPNetModel model(config);
  std::mt19937_64 rng(rng_seed);
  model.ecg_stem.initialize(rng);
  model.ppg_stem.initialize(rng);
  for (auto &block : model.blocks) {
    block.conv1.initialize(rng);
    block.conv2.initialize(rng);
    if (block.projection)
      block.projection->initialize(rng);
  }
  model.head_conv1.initialize(rng);
  model.head_conv2.initialize(rng);
  return model;
}

double normalize_sbp(double mmhg) { return (mmhg - kSbpMin) / (kSbpMax - kSbpMin); }
double denormalize_sbp(double unit) { return kSbpMin + unit * (kSbpMax - kSbpMin); }
double normalize_dbp(double mmhg) { return (mmhg - kDbpMin) / (kDbpMax - kDbpMin); }
double denormalize_dbp(double unit) { return kDbpMin + unit * (kDbpMax - kDbpMin); }

} // namespace bpnet::model
