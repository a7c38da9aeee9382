// SPDX-License-Identifier: Apache-2.0
// Acceptance run: evaluates criteria 1-9 twice with fixed seeds, then checks
// that both runs wrote byte-identical artifacts (criterion 10). Prints one
// PASS/FAIL line per criterion and exits nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <bpnet/dataset.hpp>
#include <bpnet/error.hpp>
#include <bpnet/metrics.hpp>
#include <bpnet/model.hpp>
#include <bpnet/report.hpp>
#include <bpnet/signal.hpp>
#include <bpnet/train.hpp>
#include <bpnet/wavelet.hpp>
#include <bpnet/workflow.hpp>

#include "ecg_fixture.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace bpnet;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::pair<std::string, double>> values; ///< deterministic, written to criteria.csv
};

struct Criterion {
  int id;
  const char *name;
  double limit_s;
  std::function<Outcome(const fs::path &)> run;
};

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<double> uniform(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto &x : v)
    x = dist(rng);
  return v;
}

nn::Tensor random_input(std::size_t batch, std::size_t time, std::uint64_t seed) {
  return nn::Tensor({batch, 1, time}, uniform(batch * time, seed));
}

// Hann-windowed single-bin DFT magnitude; a unit sine reads about 1.
double tone_magnitude(const std::vector<double> &v, double fs, double freq) {
  const double pi = 3.14159265358979323846, n = static_cast<double>(v.size());
  double re = 0.0, im = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / (n - 1.0));
    const double ang = 2.0 * pi * freq * static_cast<double>(i) / fs;
    re += w * v[i] * std::cos(ang);
    im -= w * v[i] * std::sin(ang);
    wsum += w;
  }
  return 2.0 * std::hypot(re, im) / wsum;
}

// Earliest and latest output index that changes when one input sample moves.
std::pair<long, long> influence_span(const model::BPNetModel &m, const nn::Tensor &ecg,
                                     const nn::Tensor &ppg, std::size_t t, bool perturb_ppg) {
  auto e2 = ecg, p2 = ppg;
  (perturb_ppg ? p2 : e2)[t] += 0.5;
  const auto y1 = m.infer(ecg, ppg), y2 = m.infer(e2, p2);
  long first = -1, last = -1;
  for (std::size_t s = 0; s < ecg.shape()[2]; ++s)
    if (y1.at(0, 0, s) != y2.at(0, 0, s) || y1.at(0, 1, s) != y2.at(0, 1, s)) {
      if (first < 0)
        first = static_cast<long>(s);
      last = static_cast<long>(s);
    }
  return {first, last};
}

Outcome gradient_check(const fs::path &) {
  model::ModelConfig c;
  c.kernel_size = 3;
  c.dilations = {1, 2};
  c.block_channels = {4, 4};
  c.input_stem_channels = 4;
  c.head_channels = 4;
  const auto m = model::build_bpnet(c, 101);
  const auto ecg = nn::constant(random_input(2, 64, 102));
  const auto ppg = nn::constant(random_input(2, 64, 103));
  const nn::Tensor target({2, 2, 64}, uniform(256, 104, 0.0, 1.0));
  const model::ForwardOptions opts{true, 105};
  auto loss_of = [&](nn::Graph &g) { return nn::mse_loss(g, m.forward(g, ecg, ppg, opts), target); };

  nn::Graph g;
  g.backward(loss_of(g));
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t checked = 0;
  for (const auto &p : m.parameters()) {
    auto &var = *p.var;
    const nn::Tensor analytic = var.grad;
    for (std::size_t i = 0; i < var.value.size(); ++i) {
      const double keep = var.value[i];
      nn::Graph gp, gm;
      var.value[i] = keep + h;
      const double up = loss_of(gp)->value[0];
      var.value[i] = keep - h;
      const double down = loss_of(gm)->value[0];
      var.value[i] = keep;
      const double num = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(num - analytic[i]) /
                                  std::max({std::abs(num), std::abs(analytic[i]), 1e-6}));
      ++checked;
    }
  }
  return {worst < 1e-4,
          std::to_string(checked) + " parameters, worst relative error " + fmt("%.3g", worst),
          {{"parameters", static_cast<double>(checked)}, {"worst_rel_error", worst}}};
}

Outcome receptive_field(const fs::path &) {
  const model::ModelConfig c;
  const std::size_t rf = model::receptive_field_total(c);
  const auto m = model::build_bpnet(c, 201);
  const std::size_t t = 100, time = t + rf + 40;
  const auto [first, last] = influence_span(m, random_input(1, time, 202),
                                            random_input(1, time, 203), t, false);
  const long span = last - first + 1;
  return {rf == 505 && first == static_cast<long>(t) && span == static_cast<long>(rf),
          "formula " + std::to_string(rf) + ", probed span " + std::to_string(span) +
              " starting at " + std::to_string(first),
          {{"formula", static_cast<double>(rf)}, {"probed_first", static_cast<double>(first)},
           {"probed_span", static_cast<double>(span)}}};
}

Outcome causality(const fs::path &) {
  const std::size_t time = 600;
  bool ok = true;
  double min_first = 1e9;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = model::build_bpnet(model::ModelConfig{}, 300 + seed);
    std::mt19937_64 rng(seed);
    const std::size_t t = 1 + rng() % (time - 1);
    const auto [first, last] = influence_span(m, random_input(1, time, 400 + seed),
                                              random_input(1, time, 500 + seed), t, seed % 2 == 1);
    // Outputs before t must be bit-identical; the perturbation must still reach t.
    ok = ok && first == static_cast<long>(t) && last >= first;
    min_first = std::min(min_first, static_cast<double>(first) - static_cast<double>(t));
  }
  return {ok, "20 seeds, earliest changed output minus perturbed index = " + fmt("%g", min_first),
          {{"min_first_minus_t", min_first}}};
}

Outcome dwt_round_trip(const fs::path &) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t n = 1024 + seed * 53;
    const double scale = std::pow(10.0, static_cast<double>(seed % 7) - 3.0);
    auto x = uniform(n, 600 + seed, -scale, scale);
    const signal::SignalVector s{1000.0, x};
    const auto y = signal::idwt_reconstruct(signal::dwt_decompose(s));
    if (y.size() != n)
      return {false, "length changed for n = " + std::to_string(n), {}};
    double err = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      err = std::max(err, std::abs(y.samples[i] - x[i]));
      peak = std::max(peak, std::abs(x[i]));
    }
    worst = std::max(worst, err / peak);
  }
  return {worst < 1e-8, "100 signals, worst error / max|x| = " + fmt("%.3g", worst),
          {{"worst_relative_error", worst}}};
}

Outcome denoising(const fs::path &) {
  constexpr std::size_t n = 7500; // 60 s at 125 Hz: 60 Hz and 0.2 Hz sit on DFT bins
  const auto ecg = fixture::clean_ecg(n, 1.1);
  const double pi = 3.14159265358979323846;
  std::vector<double> noisy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fixture::kFs;
    noisy[i] = ecg.samples[i] + 0.3 * std::sin(2 * pi * 60.0 * t) + 0.8 * std::sin(2 * pi * 0.2 * t);
  }
  const auto y = signal::denoise_ecg({fixture::kFs, noisy});
  const double notch = 20.0 * std::log10(tone_magnitude(y.samples, fixture::kFs, 60.0) /
                                         tone_magnitude(noisy, fixture::kFs, 60.0));
  const double drift = 20.0 * std::log10(tone_magnitude(y.samples, fixture::kFs, 0.2) /
                                         tone_magnitude(noisy, fixture::kFs, 0.2));
  const auto found = data::find_peaks(y.samples, {40, 0.3});
  long worst_shift = 0;
  for (std::size_t r : ecg.r_peaks) {
    long best = static_cast<long>(n);
    for (std::size_t p : found)
      best = std::min(best, std::abs(static_cast<long>(p) - static_cast<long>(r)));
    worst_shift = std::max(worst_shift, best);
  }
  const bool ok = notch <= -40.0 && drift <= -20.0 && worst_shift <= 1 &&
                  found.size() == ecg.r_peaks.size();
  return {ok,
          "60 Hz " + fmt("%.1f", notch) + " dB, 0.2 Hz " + fmt("%.1f", drift) + " dB, " +
              std::to_string(ecg.r_peaks.size()) + " R peaks, " + std::to_string(found.size()) +
              " found, worst shift " + std::to_string(worst_shift),
          {{"notch_db", notch},
           {"drift_db", drift},
           {"peaks_found", static_cast<double>(found.size())},
           {"worst_shift", static_cast<double>(worst_shift)}}};
}

Outcome lr_schedule(const fs::path &) {
  const train::TrainConfig c;
  double worst = 0.0;
  for (std::size_t e = 0; e < 300; ++e) {
    const double closed = c.base_lr *
                          std::pow(c.cycle_boundary_multiplier / 16.0, static_cast<double>(e / 100)) /
                          std::pow(2.0, static_cast<double>((e % 100) / 20));
    worst = std::max(worst, std::abs(train::lr_at_epoch(e, c) - closed) / closed);
  }
  const double r1 = train::lr_at_epoch(100, c) / train::lr_at_epoch(0, c);
  const double r2 = train::lr_at_epoch(200, c) / train::lr_at_epoch(100, c);
  return {worst <= 1e-15 && r1 == 0.9 && r2 == 0.9,
          "300 epochs, worst relative deviation " + fmt("%.3g", worst) + ", cycle ratios " +
              fmt("%.17g", r1) + " " + fmt("%.17g", r2),
          {{"worst_deviation", worst}, {"ratio_1", r1}, {"ratio_2", r2}}};
}

Outcome mu_law(const fs::path &) {
  const auto x = uniform(100000, 700);
  double worst = 0.0;
  for (double v : x)
    worst = std::max(worst, std::abs(signal::mu_law_inverse(signal::mu_law(v, 255.0), 255.0) - v));
  const double half = signal::mu_law(0.5, 255.0);
  // Reference evaluated independently: ln(128.5) / ln(256) as log2(128.5) / 8.
  const double expected = static_cast<double>(std::log2(128.5L) / 8.0L);
  return {worst < 1e-12 && std::abs(half - expected) < 1e-5,
          "1e5 points, worst round-trip error " + fmt("%.3g", worst) + ", F(0.5) = " +
              fmt("%.6f", half) + ", ln(128.5)/ln(256) = " + fmt("%.6f", expected),
          {{"worst_round_trip", worst}, {"f_half", half}}};
}

bool near(double a, long double b) {
  return std::fabs(static_cast<long double>(a) - b) <= 1e-12L * std::max(1.0L, std::fabs(b));
}

Outcome metrics_oracles(const fs::path &) {
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const std::size_t n = 3 + seed % 60;
    const auto ref = uniform(n, 800 + seed, 60.0, 180.0);
    auto est = ref;
    const auto noise = uniform(n, 2800 + seed, -12.0, 12.0);
    for (std::size_t i = 0; i < n; ++i)
      est[i] += noise[i] + 0.1 * static_cast<double>(seed % 11);

    const auto s = metrics::error_stats(ref, est);
    const auto os = oracle::stats(ref, est);
    const auto b = metrics::bhs_grade(metrics::errors(ref, est));
    const auto ob = oracle::bhs(metrics::errors(ref, est));
    const auto l = metrics::bland_altman(ref, est).limits;
    const auto ol = oracle::loa(ref, est);
    const double r = metrics::pearson_r(ref, est);
    const auto orr = oracle::pearson(ref, est);
    const bool ok = near(s.me, os.me) && near(s.sde, os.sde) && near(s.rmse, os.rmse) &&
                    near(s.mae, os.mae) && near(b.pct_within_5, ob.p5) &&
                    near(b.pct_within_10, ob.p10) && near(b.pct_within_15, ob.p15) &&
                    b.grade == ob.grade && near(l.mean_diff, ol.mean) && near(l.sd_diff, ol.sd) &&
                    near(l.loa_low, ol.low) && near(l.loa_high, ol.high) && near(r, orr);
    mismatches += ok ? 0 : 1;
  }

  // AAMI: |ME| <= 5 mmHg, SDE <= 8 mmHg, at least 85 subjects.
  struct Case {
    double me, sde;
    std::size_t subjects;
    bool pass;
  };
  const Case cases[] = {{0.0, 1.0, 85, true},   {5.0, 8.0, 85, true},   {-5.0, 8.0, 120, true},
                        {5.01, 4.0, 85, false}, {-6.0, 4.0, 85, false}, {1.0, 8.01, 85, false},
                        {1.0, 4.0, 84, false},  {6.0, 9.0, 10, false}};
  std::size_t aami_wrong = 0;
  for (const auto &c : cases) {
    const auto v = metrics::aami_check({c.me, c.sde, 0.0, 0.0, 100}, c.subjects);
    aami_wrong += (v.pass == c.pass && v.reasons.empty() == c.pass) ? 0 : 1;
  }
  return {mismatches == 0 && aami_wrong == 0,
          "1000 random cases, " + std::to_string(mismatches) + " oracle mismatches; " +
              std::to_string(std::size(cases)) + " AAMI examples, " + std::to_string(aami_wrong) +
              " wrong",
          {{"oracle_mismatches", static_cast<double>(mismatches)},
           {"aami_wrong", static_cast<double>(aami_wrong)}}};
}

workflow::RunConfig end_to_end_config() {
  workflow::RunConfig c;
  c.model.kernel_size = 5;
  c.model.dilations = {1, 2, 4, 8};
  c.model.block_channels = {8, 8, 16, 16};
  c.model.input_stem_channels = 8;
  c.model.head_channels = 64;
  c.model.output_channels = 2;
  c.model.dropout_rate = 0.0;
  c.train.batch_size = 4;
  c.train.epochs = 40;
  c.train.rng_seed = 1;
  c.data.window_len = 1024;
  c.data.stride = 256;
  return c;
}

Outcome end_to_end(const fs::path &dir) {
  const auto raw = dir / "raw", clean = dir / "clean";
  workflow::synth_dataset(raw, {8, 7, 120.0});
  const auto pre = workflow::preprocess_dataset(raw, clean);
  if (pre.files_written != 8)
    return {false, "preprocessing wrote " + std::to_string(pre.files_written) + " of 8 records", {}};
  const auto config = end_to_end_config();
  {
    std::ofstream out(dir / "config.json");
    out << workflow::run_config_to_json(config);
  }
  workflow::train_dataset(clean, config, dir / "model" / "net.json");
  const auto rep = workflow::eval_dataset(dir / "model" / "net.json", clean, dir / "report");
  const double sbp = rep.sbp.combined.mae, dbp = rep.dbp.combined.mae;
  const char gs = rep.sbp.bhs.grade, gd = rep.dbp.bhs.grade;
  const bool ok = dbp < 5.0 && sbp < 8.0 && gs <= 'B' && gd <= 'B';
  return {ok,
          "SBP MAE " + fmt("%.2f", sbp) + " mmHg, DBP MAE " + fmt("%.2f", dbp) + " mmHg, BHS " +
              std::string(1, gs) + "/" + std::string(1, gd) + ", " +
              std::to_string(rep.sbp.combined.n) + " test samples",
          {{"sbp_mae", sbp},
           {"dbp_mae", dbp},
           {"sbp_bhs", static_cast<double>(gs - 'A')},
           {"dbp_bhs", static_cast<double>(gd - 'A')}}};
}

const std::vector<Criterion> &criteria() {
  static const std::vector<Criterion> list{
      {1, "gradient correctness", 60.0, gradient_check},
      {2, "receptive field", 30.0, receptive_field},
      {3, "causality", 60.0, causality},
      {4, "DWT round trip", 10.0, dwt_round_trip},
      {5, "denoising efficacy", 10.0, denoising},
      {6, "learning-rate schedule", 1.0, lr_schedule},
      {7, "mu-law", 1.0, mu_law},
      {8, "metrics oracles", 10.0, metrics_oracles},
      {9, "end-to-end synthetic learning", 900.0, end_to_end},
  };
  return list;
}

struct Timed {
  Outcome outcome;
  double seconds = 0.0;
};

std::vector<Timed> run_all(const fs::path &dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<Timed> results;
  std::ofstream csv(dir / "criteria.csv", std::ios::binary);
  csv << "criterion,pass,quantity,value\n";
  for (const auto &c : criteria()) {
    const auto start = std::chrono::steady_clock::now();
    Timed t;
    try {
      t.outcome = c.run(dir / ("c" + std::to_string(c.id)));
    } catch (const std::exception &e) {
      t.outcome = {false, std::string("threw: ") + e.what(), {}};
    }
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto &[name, value] : t.outcome.values)
      csv << c.id << ',' << (t.outcome.pass ? 1 : 0) << ',' << name << ','
          << fmt("%.17g", value) << '\n';
    results.push_back(std::move(t));
  }
  return results;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

int main() {
  const fs::path work{BPNET_ACCEPTANCE_WORKDIR};
  const auto first = run_all(work / "run1");

  bool all = true;
  for (std::size_t i = 0; i < first.size(); ++i) {
    const auto &c = criteria()[i];
    const auto &r = first[i];
    const bool pass = r.outcome.pass && r.seconds < c.limit_s;
    all = all && pass;
    std::printf("criterion %d %s: %s (%s; %.2f s, limit %.0f s)\n", c.id, c.name,
                pass ? "PASS" : "FAIL", r.outcome.detail.c_str(), r.seconds, c.limit_s);
    std::fflush(stdout);
  }

  run_all(work / "run2");
  std::vector<fs::path> compared{"criteria.csv", "c9/model/history.csv", "c9/config.json"};
  for (const auto &name : report::report_files())
    compared.push_back(fs::path("c9/report") / name);
  std::size_t differ = 0;
  std::string first_diff;
  for (const auto &rel : compared) {
    const bool present = fs::exists(work / "run1" / rel) && fs::exists(work / "run2" / rel);
    if (!present || slurp(work / "run1" / rel) != slurp(work / "run2" / rel)) {
      if (differ++ == 0)
        first_diff = rel.string();
    }
  }
  const bool det = differ == 0;
  all = all && det;
  std::printf("criterion 10 determinism: %s (%zu artifacts compared across two runs, %zu differ%s)\n",
              det ? "PASS" : "FAIL", compared.size(), differ,
              det ? "" : (", first: " + first_diff).c_str());
  return all ? 0 : 1;
}
