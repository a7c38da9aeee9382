// SPDX-License-Identifier: Apache-2.0
#include <bpnet/synth.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include <bpnet/autograd.hpp>
#include <bpnet/error.hpp>

namespace bpnet::data {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Portable draws: only the raw mt19937_64 stream is relied upon.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return nn::unit_uniform(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

private:
  std::mt19937_64 engine_;
};

struct Wave {
  double amplitude, offset_s, width_s;
};

// P, Q, R, S, T components relative to the R peak.
constexpr std::array<Wave, 5> kEcgWaves{{{0.12, -0.16, 0.022},
                                         {-0.10, -0.03, 0.008},
                                         {1.00, 0.00, 0.009},
                                         {-0.20, 0.03, 0.010},
                                         {0.30, 0.25, 0.045}}};

struct Lead {
  const char *name;
  double gain;
};
constexpr std::array<Lead, 4> kLeads{{{"I", 0.7}, {"II", 1.0}, {"III", 0.5}, {"IV", 0.8}}};

constexpr double kPeakFraction = 0.25;

// u^2 (1-u)^6 scaled to peak 1 at u = kPeakFraction; flat at both ends.
double systolic_bump(double u) {
  if (u <= 0.0 || u >= 1.0)
    return 0.0;
  const double a = u / kPeakFraction, b = (1.0 - u) / (1.0 - kPeakFraction);
  return a * a * std::pow(b, 6);
}

double ppg_pulse(double since_onset_s) {
  if (since_onset_s <= 0.0)
    return 0.0;
  const double x = since_onset_s / 0.1;
  const double main = x * x * std::exp(2.0 - x) / 4.0;
  const double y = (since_onset_s - 0.3) / 0.07;
  const double reflected = since_onset_s > 0.3 ? 0.25 * y * y * std::exp(2.0 - y) / 4.0 : 0.0;
  return main + reflected;
}

std::vector<double> hold(const std::vector<std::pair<std::size_t, double>> &events,
                         std::size_t n) {
  std::vector<double> out(n);
  std::size_t next = 0;
  double current = events.front().second;
  for (std::size_t t = 0; t < n; ++t) {
    while (next < events.size() && events[next].first <= t)
      current = events[next++].second;
    out[t] = current;
  }
  return out;
}

} // namespace

SynthSubject synth_subject(const std::string &subject_id, const SynthOptions &options) {
  require(options.duration_s >= kSynthMinDurationS, "synthetic duration must be >= 30 s");
  require(options.heart_rate_hz > 0.5 && options.heart_rate_hz < 3.0,
          "heart rate must lie in (0.5, 3) Hz");
  require(options.fixed_lag_s == 0.0 || (options.fixed_lag_s > 0.05 && options.fixed_lag_s < 1.0),
          "fixed lag must lie in (0.05, 1) s");

  Rng rng(options.seed);
  const double fs = kRecordRateHz;
  const auto n = static_cast<std::size_t>(std::llround(options.duration_s * fs));

  const Lead &lead = kLeads[static_cast<std::size_t>(rng.uniform() * kLeads.size()) % kLeads.size()];
  const double lag_period = options.duration_s * rng.uniform(0.35, 0.6);
  const double lag_phase = rng.uniform(0.0, kTwoPi);
  const double rr_phase = rng.uniform(0.0, kTwoPi);
  const double wander_phase = rng.uniform(0.0, kTwoPi);
  const double base_rr = 1.0 / options.heart_rate_hz;

  struct Beat {
    double r, lag, foot, sbp, dbp;
  };
  std::vector<Beat> beats;
  for (double r = -2.0; r < options.duration_s + 2.0;) {
    const double lag = options.fixed_lag_s > 0.0
                           ? options.fixed_lag_s
                           : 0.25 + 0.08 * std::sin(kTwoPi * r / lag_period + lag_phase);
    Beat b{r, lag, r + 0.6 * lag, 0.0, 0.0};
    b.sbp = kSbpIntercept + kSbpSlope / lag + rng.uniform(-kBeatNoiseMmhg, kBeatNoiseMmhg);
    b.dbp = kDbpIntercept + kDbpSlope / lag + rng.uniform(-kBeatNoiseMmhg, kBeatNoiseMmhg);
    beats.push_back(b);
    const double rr = base_rr * (1.0 + 0.04 * std::sin(kTwoPi * r / 9.1 + rr_phase) +
                                 rng.uniform(-0.02, 0.02));
    r += rr;
  }

  SynthSubject out;
  SubjectRecord &rec = out.record;
  rec.subject_id = subject_id;
  rec.ecg_lead = lead.name;
  for (auto *s : {&rec.ecg, &rec.ppg, &rec.abp}) {
    s->sample_rate_hz = fs;
    s->samples.assign(n, 0.0);
  }

  const auto sample_range = [&](double from_s, double to_s) {
    const double lo = std::max(0.0, std::ceil(from_s * fs));
    const double hi = std::min(static_cast<double>(n), std::ceil(to_s * fs));
    return std::pair<std::size_t, std::size_t>{static_cast<std::size_t>(lo),
                                               static_cast<std::size_t>(std::max(lo, hi))};
  };

  for (std::size_t k = 0; k < beats.size(); ++k) {
    const Beat &b = beats[k];
    auto [e0, e1] = sample_range(b.r - 0.4, b.r + 0.5);
    for (std::size_t i = e0; i < e1; ++i) {
      const double t = static_cast<double>(i) / fs - b.r;
      for (const Wave &w : kEcgWaves) {
        const double z = (t - w.offset_s) / w.width_s;
        rec.ecg.samples[i] += lead.gain * w.amplitude * std::exp(-0.5 * z * z);
      }
    }
    const double onset = b.r + b.lag;
    auto [p0, p1] = sample_range(onset, onset + 1.5);
    for (std::size_t i = p0; i < p1; ++i)
      rec.ppg.samples[i] += ppg_pulse(static_cast<double>(i) / fs - onset);

    if (k + 1 < beats.size()) {
      const Beat &next = beats[k + 1];
      const double span = next.foot - b.foot;
      auto [a0, a1] = sample_range(b.foot, next.foot);
      for (std::size_t i = a0; i < a1; ++i) {
        const double u = (static_cast<double>(i) / fs - b.foot) / span;
        // Rise from this beat's diastolic level, fall to the next one's, so the
        // extremes sit exactly at the labelled peak and feet.
        const double floor = u <= kPeakFraction ? b.dbp : next.dbp;
        rec.abp.samples[i] = floor + (b.sbp - floor) * systolic_bump(u);
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    rec.ecg.samples[i] += 0.1 * std::sin(kTwoPi * 0.2 * t + wander_phase) +
                          0.02 * std::sin(kTwoPi * 60.0 * t) + 0.01 * rng.normal();
    rec.ppg.samples[i] += 0.08 * std::sin(kTwoPi * 0.25 * t + wander_phase) + 0.01 * rng.normal();
  }

  std::vector<std::pair<std::size_t, double>> systolic, diastolic;
  for (std::size_t k = 0; k + 1 < beats.size(); ++k) {
    const Beat &b = beats[k];
    if (b.r < 0.0 || b.r * fs >= static_cast<double>(n))
      continue;
    const double peak_s = b.foot + kPeakFraction * (beats[k + 1].foot - b.foot);
    GroundTruthBeat truth;
    truth.r_peak = static_cast<std::size_t>(std::llround(b.r * fs));
    truth.foot = static_cast<std::size_t>(std::llround(b.foot * fs));
    truth.peak = static_cast<std::size_t>(std::llround(peak_s * fs));
    truth.lag_s = b.lag;
    truth.sbp = b.sbp;
    truth.dbp = b.dbp;
    if (truth.foot < n)
      diastolic.emplace_back(truth.foot, b.dbp);
    if (truth.peak < n)
      systolic.emplace_back(truth.peak, b.sbp);
    out.beats.push_back(truth);
  }
  out.targets.sbp = hold(systolic, n);
  out.targets.dbp = hold(diastolic, n);
  return out;
}

std::string format_ground_truth(const std::vector<GroundTruthBeat> &beats) {
  std::string out = "beat,r_peak,foot,peak,lag_s,sbp,dbp\n";
  char line[160];
  for (std::size_t k = 0; k < beats.size(); ++k) {
    const auto &b = beats[k];
    std::snprintf(line, sizeof line, "%zu,%zu,%zu,%zu,%.6f,%.6f,%.6f\n", k, b.r_peak, b.foot,
                  b.peak, b.lag_s, b.sbp, b.dbp);
    out += line;
  }
  return out;
}

} // namespace bpnet::data
