// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <bpnet/model.hpp>

#include "test_util.hpp"

using namespace bpnet::model;
using bpnet::ErrorKind;
using bpnet::nn::Shape;

namespace {

Tensor random_input(std::size_t batch, std::size_t time, std::uint64_t seed) {
  return Tensor({batch, 1, time}, testutil::uniform_vector(batch * time, seed));
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.kernel_size = 3;
  c.dilations = {1, 2};
  c.block_channels = {4, 4};
  c.input_stem_channels = 2;
  c.head_channels = 4;
  c.dropout_rate = 0.0;
  return c;
}

std::size_t conv_params(std::size_t in, std::size_t out, std::size_t taps) {
  return out * in * taps + 2 * out; // direction + gain + bias
}

// Earliest and latest output index that changes when input t moves.
std::pair<long, long> influence_span(const BPNetModel &m, std::size_t time, std::size_t t) {
  const auto e = random_input(1, time, 1), p = random_input(1, time, 2);
  auto e2 = e;
  e2[t] += 0.5;
  const auto y1 = m.infer(e, p), y2 = m.infer(e2, p);
  long first = -1, last = -1;
  for (std::size_t s = 0; s < time; ++s)
    if (y1.at(0, 0, s) != y2.at(0, 0, s) || y1.at(0, 1, s) != y2.at(0, 1, s)) {
      if (first < 0)
        first = static_cast<long>(s);
      last = static_cast<long>(s);
    }
  return {first, last};
}

std::filesystem::path temp_file(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / "bpnet_test_model";
  std::filesystem::create_directories(dir);
  return dir / name;
}

} // namespace

TEST_CASE("default architecture") {
  const ModelConfig config;
  const auto m = build_bpnet(config, 0);
  REQUIRE(m.blocks.size() == 6);
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(m.blocks[k].conv1.dilation() == (std::size_t{1} << k));
    CHECK(m.blocks[k].conv2.dilation() == (std::size_t{1} << k));
    CHECK(m.blocks[k].conv1.kernel_size() == 5);
    CHECK(m.blocks[k].conv2.out_channels() == config.block_channels[k]);
  }
  const bool has_proj[] = {true, false, true, false, true, true};
  for (std::size_t k = 0; k < 6; ++k)
    CHECK(m.blocks[k].projection.has_value() == has_proj[k]);
  CHECK(m.blocks[0].conv1.in_channels() == 64);
  CHECK(m.ecg_stem.out_channels() == 32);
  CHECK(m.ppg_stem.out_channels() == 32);
  CHECK(m.head_conv1.out_channels() == 256);
  CHECK(m.head_conv2.out_channels() == 2);
}

TEST_CASE("parameter count follows from the channel walk") {
  const ModelConfig c;
  std::size_t expected = 2 * conv_params(1, c.input_stem_channels, 1);
  std::size_t in = 2 * c.input_stem_channels;
  for (std::size_t out : c.block_channels) {
    expected += conv_params(in, out, c.kernel_size) + conv_params(out, out, c.kernel_size);
    if (in != out)
      expected += conv_params(in, out, 1);
    in = out;
  }
  expected += conv_params(in, c.head_channels, 1) + conv_params(c.head_channels, 2, 1);
  const auto a = build_bpnet(c, 1), b = build_bpnet(c, 2);
  CHECK(a.parameter_count() == expected);
  CHECK(b.parameter_count() == expected);
}

TEST_CASE("same seed builds bit-identical parameters") {
  const auto a = build_bpnet(tiny_config(), 9), b = build_bpnet(tiny_config(), 9),
             c = build_bpnet(tiny_config(), 10);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  REQUIRE(pa.size() == pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(testutil::max_abs_diff(pa[i].var->value.values(), pb[i].var->value.values()) == 0.0);
    any_diff |= testutil::max_abs_diff(pa[i].var->value.values(), pc[i].var->value.values()) > 0;
  }
  CHECK(any_diff);
}

TEST_CASE("invalid configurations") {
  auto c = tiny_config();
  c.dilations = {1, 2, 4};
  CHECK_THROWS_AS(build_bpnet(c, 0), bpnet::Error);
  c = tiny_config();
  c.block_channels = {4, 0};
  CHECK_THROWS_AS(validate(c), bpnet::Error);
  c = tiny_config();
  c.output_channels = 3;
  CHECK_THROWS_AS(validate(c), bpnet::Error);
}

TEST_CASE("forward shape, zero response and length check") {
  const auto m = build_bpnet(ModelConfig{}, 3);
  const auto y = m.infer(random_input(1, 600, 4), random_input(1, 600, 5));
  CHECK(y.shape() == Shape{1, 2, 600});
  CHECK(y.all_finite());

  // Biases start at zero and ELU(0) = 0, so silence maps to silence.
  const auto z = m.infer(Tensor({2, 1, 64}, 0.0), Tensor({2, 1, 64}, 0.0));
  CHECK(testutil::max_abs(z.values()) == 0.0);

  CHECK_THROWS_AS(m.infer(random_input(1, 64, 1), random_input(1, 65, 2)), bpnet::Error);
}

TEST_CASE("causality through the default network") {
  const auto m = build_bpnet(ModelConfig{}, 11);
  const auto [first, last] = influence_span(m, 600, 500);
  CHECK(first == 500);
  CHECK(last == 599);
}

TEST_CASE("receptive field: formula and probing") {
  CHECK(receptive_field_total(ModelConfig{}) == 505);
  ModelConfig one;
  one.dilations = {1};
  one.block_channels = {8};
  CHECK(receptive_field_total(one) == 9);
  ModelConfig flat = tiny_config();
  flat.kernel_size = 1;
  CHECK(receptive_field_total(flat) == 1);

  for (const auto &c : {one, tiny_config(), flat}) {
    const auto m = build_bpnet(c, 4);
    const std::size_t rf = receptive_field_total(c);
    const auto [first, last] = influence_span(m, 100 + rf + 20, 100);
    CHECK(first == 100);
    CHECK(last - first + 1 == static_cast<long>(rf));
  }
}

TEST_CASE("residual block wiring: zero convolutions pass ELU(x)") {
  auto c = tiny_config();
  auto m = build_bpnet(c, 5);
  auto &block = m.blocks[1]; // 4 -> 4, no projection
  REQUIRE_FALSE(block.projection.has_value());
  for (auto *l : {&block.conv1, &block.conv2})
    l->gain()->value.fill(0.0);
  const Tensor x({1, 4, 16}, testutil::uniform_vector(64, 6, -2.0, 2.0));
  Graph g;
  auto y = residual_forward(g, block, bpnet::nn::constant(x), {}, 0);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(y->value[i] == bpnet::nn::elu_value(x[i]));
}

TEST_CASE("end-to-end gradients on a shrunk network") {
  ModelConfig c;
  c.kernel_size = 5;
  c.dilations = {1, 2};
  c.block_channels = {4, 4};
  c.input_stem_channels = 4;
  c.head_channels = 4;
  c.dropout_rate = 0.2;
  const auto m = build_bpnet(c, 12);
  const auto ecg = bpnet::nn::constant(random_input(2, 64, 13));
  const auto ppg = bpnet::nn::constant(random_input(2, 64, 14));
  const Tensor target({2, 2, 64}, testutil::uniform_vector(256, 15, 0.0, 1.0));
  const ForwardOptions opts{true, 77};
  auto loss_of = [&](Graph &g) { return mse_loss(g, m.forward(g, ecg, ppg, opts), target); };

  Graph g;
  g.backward(loss_of(g));
  double worst = 0.0;
  for (const auto &p : m.parameters()) {
    auto &var = *p.var;
    const Tensor analytic = var.grad;
    for (std::size_t i = 0; i < var.value.size(); ++i) {
      const double keep = var.value[i];
      Graph gp, gm;
      var.value[i] = keep + 1e-5;
      const double up = loss_of(gp)->value[0];
      var.value[i] = keep - 1e-5;
      const double down = loss_of(gm)->value[0];
      var.value[i] = keep;
      const double num = (up - down) / 2e-5;
      worst = std::max(worst, std::abs(num - analytic[i]) /
                                  std::max({std::abs(num), std::abs(analytic[i]), 1e-6}));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip is bit exact") {
    const auto m = build_bpnet(tiny_config(), 20);
    const auto path = temp_file("roundtrip.json");
    save_checkpoint(m, path, {7, 256, 125.0});
    CheckpointMeta meta;
    const auto back = load_checkpoint(path, &meta);
    CHECK(back.config() == m.config());
    CHECK(meta.epochs_completed == 7);
    CHECK(meta.window_len == 256);
    CHECK(back.parameter_count() == m.parameter_count());
    const auto pa = m.parameters(), pb = back.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i)
      CHECK(testutil::max_abs_diff(pa[i].var->value.values(), pb[i].var->value.values()) == 0.0);
    const auto e = random_input(1, 80, 21), p = random_input(1, 80, 22);
    CHECK(testutil::max_abs_diff(m.infer(e, p).values(), back.infer(e, p).values()) == 0.0);
    CHECK(checkpoint_to_string(back, meta) == checkpoint_to_string(m, {7, 256, 125.0}));
  }

  TEST_CASE("truncated, foreign and future files are rejected") {
    const auto text = checkpoint_to_string(build_bpnet(tiny_config(), 1));
    CHECK(testutil::throws_error([&] { checkpoint_from_string(text.substr(0, text.size() / 2)); },
                                 ErrorKind::Data, "incompatible checkpoint"));
    CHECK(testutil::throws_error([&] { checkpoint_from_string("{\"format\":\"other\"}"); },
                                 ErrorKind::Data, "incompatible checkpoint"));
    auto future = text;
    const auto pos = future.find("\"format_version\": 1");
    REQUIRE(pos != std::string::npos);
    future.replace(pos, 19, "\"format_version\": 7");
    CHECK(testutil::throws_error([&] { checkpoint_from_string(future); }, ErrorKind::Data,
                                 "format_version 7"));
    CHECK(testutil::throws_error([] { load_checkpoint(temp_file("absent.json")); },
                                 ErrorKind::Io, "cannot open"));
  }
}

TEST_CASE("target scaling round trip") {
  for (double v = 20.0; v <= 260.0; v += 0.37) {
    CHECK(std::abs(denormalize_sbp(normalize_sbp(v)) - v) < 1e-12);
    CHECK(std::abs(denormalize_dbp(normalize_dbp(v)) - v) < 1e-12);
  }
  CHECK(normalize_sbp(50.0) == 0.0);
  CHECK(normalize_sbp(220.0) == 1.0);
  CHECK(normalize_dbp(30.0) == 0.0);
  CHECK(normalize_dbp(150.0) == 1.0);
}
