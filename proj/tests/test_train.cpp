// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include <bpnet/synth.hpp>
#include <bpnet/train.hpp>

#include "test_util.hpp"

using namespace bpnet::train;
using bpnet::ErrorKind;
using bpnet::model::ModelConfig;

namespace {

ModelConfig small_model() {
  ModelConfig c;
  c.kernel_size = 3;
  c.dilations = {1, 2};
  c.block_channels = {4, 4};
  c.input_stem_channels = 4;
  c.head_channels = 8;
  c.dropout_rate = 0.1;
  return c;
}

struct Fixture {
  bpnet::data::SubjectRecord record;
  std::vector<WindowedExample> train, valid;
};

Fixture windows(std::size_t window_len = 64) {
  auto s = bpnet::data::synth_subject("T", {3, 30.0, 1.2, 0.0});
  Fixture f;
  f.record = s.record;
  const auto tg = bpnet::data::extract_bp_targets(s.record.abp);
  const auto split = bpnet::data::split_record(s.record.size());
  f.train = bpnet::data::make_windows(s.record, tg, split.train, window_len, 128);
  f.valid = bpnet::data::make_windows(s.record, tg, split.valid, window_len, 128);
  return f;
}

std::vector<double> flat_parameters(const BPNetModel &m) {
  std::vector<double> out;
  for (const auto &p : m.parameters())
    out.insert(out.end(), p.var->value.values().begin(), p.var->value.values().end());
  return out;
}

} // namespace

TEST_SUITE("schedule") {
  TEST_CASE("documented values") {
    const TrainConfig c;
    CHECK(lr_at_epoch(0, c) == 0.001);
    CHECK(lr_at_epoch(19, c) == 0.001);
    CHECK(lr_at_epoch(20, c) == 0.0005);
    CHECK(lr_at_epoch(40, c) == 0.00025);
    CHECK(lr_at_epoch(99, c) == 0.001 / 16.0);
    CHECK(lr_at_epoch(100, c) == doctest::Approx(0.0009).epsilon(1e-15));
  }

  TEST_CASE("closed form over three cycles") {
    const TrainConfig c;
    for (std::size_t e = 0; e < 300; ++e) {
      const double closed =
          0.001 * std::pow(14.4 / 16.0, static_cast<double>(e / 100)) /
          std::pow(2.0, static_cast<double>((e % 100) / 20));
      CHECK(std::abs(lr_at_epoch(e, c) - closed) <= 1e-15 * closed);
    }
  }

  TEST_CASE("cycle-start ratio is exactly 0.9") {
    const TrainConfig c;
    for (std::size_t k = 1; k <= 2; ++k)
      CHECK(lr_at_epoch(100 * k, c) / lr_at_epoch(100 * (k - 1), c) == 0.9);
  }

  TEST_CASE("piecewise constant, positive, steps only at multiples of 20") {
    const TrainConfig c;
    for (std::size_t e = 1; e < 400; ++e) {
      CHECK(lr_at_epoch(e, c) > 0.0);
      if (e % 20 != 0)
        CHECK(lr_at_epoch(e, c) == lr_at_epoch(e - 1, c));
      else
        CHECK(lr_at_epoch(e, c) != lr_at_epoch(e - 1, c));
    }
  }

  TEST_CASE("config validation") {
    TrainConfig c;
    c.batch_size = 0;
    CHECK_THROWS_AS(validate(c), bpnet::Error);
    c = {};
    c.base_lr = -1.0;
    CHECK_THROWS_AS(validate(c), bpnet::Error);
    c = {};
    c.loss = "mae";
    CHECK_THROWS_AS(validate(c), bpnet::Error);
  }
}

TEST_SUITE("loss") {
  TEST_CASE("zero, unit and brute force") {
    const Tensor a({2, 2, 5}, testutil::uniform_vector(20, 1));
    CHECK(mse_loss(a, a).loss == 0.0);
    Tensor b = a;
    for (auto &v : b.values())
      v -= 1.0;
    CHECK(mse_loss(a, b).loss == doctest::Approx(1.0).epsilon(1e-15));

    const Tensor c({2, 2, 5}, testutil::uniform_vector(20, 2));
    double s = 0.0;
    for (std::size_t i = 0; i < 20; ++i)
      s += (a[i] - c[i]) * (a[i] - c[i]);
    const auto l = mse_loss(a, c);
    CHECK(std::abs(l.loss - s / 20.0) < 1e-12);
    for (std::size_t i = 0; i < 20; ++i)
      CHECK(std::abs(l.grad[i] - 2.0 * (a[i] - c[i]) / 20.0) < 1e-12);
  }

  TEST_CASE("shape mismatch") {
    CHECK_THROWS_AS(mse_loss(Tensor({1, 2, 3}), Tensor({1, 2, 4})), bpnet::Error);
  }
}

TEST_SUITE("training") {
  TEST_CASE("one epoch on one batch lowers the loss") {
    auto f = windows();
    f.train.resize(4);
    auto m = bpnet::model::build_bpnet(small_model(), 1);
    TrainConfig c;
    c.batch_size = 4;
    c.epochs = 1;
    c.base_lr = 0.01;
    const double before = evaluate_loss(m, f.train, 4);
    train(m, f.train, {}, c);
    const double after = evaluate_loss(m, f.train, 4);
    CHECK(after < before);
  }

  TEST_CASE("history follows the schedule and the run is reproducible") {
    const auto f = windows();
    TrainConfig c;
    c.batch_size = 3; // leaves a partial final batch
    c.epochs = 6;
    c.halving_period_epochs = 2;
    c.cycle_len_epochs = 4;
    c.rng_seed = 17;
    auto m1 = bpnet::model::build_bpnet(small_model(), 2);
    auto m2 = bpnet::model::build_bpnet(small_model(), 2);
    std::size_t callbacks = 0;
    const auto r1 = train(m1, f.train, f.valid, c, {0, [&](const EpochRecord &) { ++callbacks; }});
    const auto r2 = train(m2, f.train, f.valid, c);
    CHECK(callbacks == 6);
    REQUIRE(r1.history.epochs.size() == 6);
    for (const auto &e : r1.history.epochs) {
      CHECK(e.lr == lr_at_epoch(e.epoch, c));
      CHECK(std::isfinite(e.train_loss));
      CHECK(std::isfinite(e.valid_loss));
    }
    CHECK(format_history(r1.history) == format_history(r2.history));
    CHECK(flat_parameters(m1) == flat_parameters(m2));
    REQUIRE(r1.best_model.has_value());
    double best = 1e300;
    for (const auto &e : r1.history.epochs)
      best = std::min(best, e.valid_loss);
    CHECK(r1.best_valid_loss == best);
    CHECK(evaluate_loss(*r1.best_model, f.valid, 8) == doctest::Approx(best).epsilon(1e-12));

    c.rng_seed = 18;
    auto m3 = bpnet::model::build_bpnet(small_model(), 2);
    train(m3, f.train, f.valid, c);
    CHECK(flat_parameters(m3) != flat_parameters(m1));
  }

  TEST_CASE("resume offset continues the schedule") {
    const auto f = windows();
    TrainConfig c;
    c.epochs = 2;
    c.batch_size = 8;
    auto m = bpnet::model::build_bpnet(small_model(), 3);
    const auto r = train(m, f.train, {}, c, {99, {}});
    REQUIRE(r.history.epochs.size() == 2);
    CHECK(r.history.epochs[0].epoch == 99);
    CHECK(r.history.epochs[1].lr == lr_at_epoch(100, c));
    CHECK(std::isnan(r.history.epochs[0].valid_loss));
  }

  TEST_CASE("history csv") {
    TrainHistory h;
    h.epochs.push_back({0, 0.001, 0.5, 0.25});
    CHECK(format_history(h) == "epoch,lr,train_loss,valid_loss\n0,0.001,0.5,0.25\n");
  }

  TEST_CASE("empty training set") {
    auto m = bpnet::model::build_bpnet(small_model(), 3);
    CHECK(testutil::throws_error([&] { train(m, {}, {}, TrainConfig{}); }, ErrorKind::Data,
                                 "empty training set"));
  }
}

TEST_SUITE("predict") {
  TEST_CASE("covers the segment for any window length") {
    const auto f = windows();
    const auto m = bpnet::model::build_bpnet(small_model(), 4);
    for (std::size_t window : {1u, 5u, 13u, 64u, 1000u})
      for (const bpnet::data::Segment seg : {bpnet::data::Segment{0, 1}, {100, 450}, {0, 3750}}) {
        const auto p = predict(m, f.record, seg, window);
        CHECK(p.sbp.size() == seg.size());
        CHECK(p.dbp.size() == seg.size());
        for (double v : p.sbp)
          CHECK(std::isfinite(v));
      }
    const auto a = predict(m, f.record, {200, 900}, 64);
    const auto b = predict(m, f.record, {200, 900}, 64);
    CHECK(a.sbp == b.sbp);
  }

  TEST_CASE("outputs are the denormalised network rows") {
    const auto f = windows();
    const auto m = bpnet::model::build_bpnet(small_model(), 5);
    // One chunk without history: the whole segment is a single window.
    const std::size_t n = 40;
    const auto p = predict(m, f.record, {0, n}, 4 * n);
    const auto in = [&](const std::vector<double> &x) {
      return Tensor({1, 1, n}, bpnet::signal::normalize_mu_law(std::span<const double>(x.data(), n)));
    };
    const auto y = m.infer(in(f.record.ecg.samples), in(f.record.ppg.samples));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(p.sbp[i] == doctest::Approx(50.0 + 170.0 * y.at(0, 0, i)).epsilon(1e-12));
      CHECK(p.dbp[i] == doctest::Approx(30.0 + 120.0 * y.at(0, 1, i)).epsilon(1e-12));
    }
  }
}
