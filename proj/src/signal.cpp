// SPDX-License-Identifier: Apache-2.0
#include <bpnet/signal.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>

#include <bpnet/error.hpp>
#include <bpnet/wavelet.hpp>

namespace bpnet::signal {
namespace {

// Resampling kernel: windowed sinc, 32 zero crossings per side.
constexpr double kCutoffFraction = 0.9;
constexpr double kZeroCrossings = 32.0;
constexpr double kKaiserBeta = 8.0;

double sinc(double x) {
  if (std::abs(x) < 1e-12)
    return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double u, double beta) {
  if (std::abs(u) >= 1.0)
    return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u)) /
         std::cyl_bessel_i(0.0, beta);
}

// Burg's method; returns prediction-error filter a[0..p] with a[0] = 1.
std::vector<double> burg(std::span<const double> x, std::size_t order) {
  std::vector<double> f(x.begin(), x.end()), b(x.begin(), x.end());
  std::vector<double> a{1.0};
  const std::size_t n = x.size();
  for (std::size_t m = 0; m < order && m + 1 < n; ++m) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = m + 1; i < n; ++i) {
      num += f[i] * b[i - 1];
      den += f[i] * f[i] + b[i - 1] * b[i - 1];
    }
    if (den <= 0.0)
      break;
    const double k = -2.0 * num / den;
    for (std::size_t i = n - 1; i >= m + 1; --i) {
      const double fi = f[i], bi = b[i - 1];
      f[i] = fi + k * bi;
      b[i] = bi + k * fi;
    }
    a.push_back(0.0);
    std::vector<double> reflected(a.rbegin(), a.rend());
    for (std::size_t i = 0; i < a.size(); ++i)
      a[i] += k * reflected[i];
  }
  return a;
}

} // namespace

void validate(const SignalVector &signal) {
  if (!(signal.sample_rate_hz > 0.0) || !std::isfinite(signal.sample_rate_hz))
    fail(ErrorKind::InvalidArgument, "sample rate must be positive");
  for (std::size_t i = 0; i < signal.samples.size(); ++i)
    if (!std::isfinite(signal.samples[i]))
      fail(ErrorKind::Numeric,
           "non-finite sample at index " + std::to_string(i));
}

std::vector<double> predict_tail(std::span<const double> samples,
                                 std::size_t count, std::size_t order,
                                 std::size_t fit_length) {
  if (samples.empty())
    return std::vector<double>(count, 0.0);
  const std::size_t len = std::min(fit_length, samples.size());
  const auto tail = samples.subspan(samples.size() - len);
  const double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(len);

  std::vector<double> centred(len);
  double energy = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    centred[i] = tail[i] - mean;
    energy += centred[i] * centred[i];
    peak = std::max(peak, std::abs(tail[i]));
  }
  const double floor = 1e-12 * std::max(peak, 1e-300);
  if (len < 3 || energy <= floor * floor * static_cast<double>(len))
    return std::vector<double>(count, mean);

  const auto a = burg(centred, std::min(order, len - 1));
  const std::size_t p = a.size() - 1;
  std::vector<double> history = std::move(centred);
  history.reserve(history.size() + count);
  for (std::size_t step = 0; step < count; ++step) {
    double next = 0.0;
    const std::size_t end = history.size();
    for (std::size_t i = 1; i <= p; ++i)
      next -= a[i] * history[end - i];
    history.push_back(next);
  }
  std::vector<double> out(history.end() - static_cast<long>(count), history.end());
  for (double &v : out)
    v += mean;
  return out;
}

SignalVector resample(const SignalVector &signal, double target_hz) {
  if (signal.empty())
    fail(ErrorKind::InvalidArgument, "empty input");
  require(target_hz > 0.0 && std::isfinite(target_hz), "target rate must be positive");
  validate(signal);

  const double source_hz = signal.sample_rate_hz;
  const auto &x = signal.samples;
  const std::size_t n = x.size();
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * target_hz / source_hz));
  if (source_hz == target_hz)
    return signal;

  const double cutoff = kCutoffFraction * std::min(source_hz, target_hz) / 2.0;
  const double half_width = kZeroCrossings / (2.0 * cutoff); // seconds
  const auto reach = static_cast<std::size_t>(std::ceil(half_width * source_hz)) + 1;

  // ext[k] holds x[k - reach]; both ends continued by linear prediction.
  std::vector<double> reversed(x.rbegin(), x.rend());
  auto head = predict_tail(reversed, reach);
  auto tail = predict_tail(x, reach);
  std::vector<double> ext;
  ext.reserve(n + 2 * reach);
  ext.insert(ext.end(), head.rbegin(), head.rend());
  ext.insert(ext.end(), x.begin(), x.end());
  ext.insert(ext.end(), tail.begin(), tail.end());

  // Weights depend only on the fractional phase of the output instant, which
  // repeats exactly for integer rate ratios.
  constexpr std::size_t kMaxCachedPhases = 4096;
  std::unordered_map<double, std::vector<double>> weights_by_phase;
  const long span_len = 2 * static_cast<long>(reach);
  auto weights_for = [&](double phase) {
    std::vector<double> w(static_cast<std::size_t>(span_len));
    double norm = 0.0;
    for (long k = 0; k < span_len; ++k) {
      // tap k sits at input index centre - reach + 1 + k
      const double tau = (phase + static_cast<double>(static_cast<long>(reach) - 1 - k)) / source_hz;
      w[static_cast<std::size_t>(k)] =
          sinc(2.0 * cutoff * tau) * kaiser(tau / half_width, kKaiserBeta);
      norm += w[static_cast<std::size_t>(k)];
    }
    for (double &v : w)
      v /= norm;
    return w;
  };

  std::vector<double> out(out_len);
  for (std::size_t j = 0; j < out_len; ++j) {
    const double position = static_cast<double>(j) * source_hz / target_hz;
    const double whole = std::floor(position);
    const double phase = position - whole;
    const auto centre = static_cast<long>(whole);

    const std::vector<double> *w = nullptr;
    std::vector<double> scratch;
    if (auto it = weights_by_phase.find(phase); it != weights_by_phase.end()) {
      w = &it->second;
    } else if (weights_by_phase.size() < kMaxCachedPhases) {
      w = &weights_by_phase.emplace(phase, weights_for(phase)).first->second;
    } else {
      scratch = weights_for(phase);
      w = &scratch;
    }

    // ext index of tap 0 is (centre - reach + 1) + reach.
    const long base = centre + 1;
    double acc = 0.0;
    for (long k = 0; k < span_len; ++k) {
      const long idx = std::clamp(base + k, 0L, static_cast<long>(ext.size()) - 1);
      acc += (*w)[static_cast<std::size_t>(k)] * ext[static_cast<std::size_t>(idx)];
    }
    out[j] = acc;
  }
  return {target_hz, std::move(out)};
}

namespace {

SignalVector denoise(const SignalVector &signal) {
  validate(signal);
  if (signal.empty())
    fail(ErrorKind::InvalidArgument, "empty input");
  const SignalVector fast = resample(signal, kProcessingRateHz);
  const WaveletPyramid cleaned = threshold_coefficients(dwt_decompose(fast));
  const SignalVector rebuilt = idwt_reconstruct(cleaned);
  const SignalVector notched = bandstop_bidirectional(rebuilt);
  SignalVector out = resample(notched, signal.sample_rate_hz);
  // Non-integer rate ratios can round the two conversions one sample apart.
  out.samples.resize(signal.size(), out.samples.empty() ? 0.0 : out.samples.back());
  return out;
}

} // namespace

SignalVector denoise_ecg(const SignalVector &signal) { return denoise(signal); }

SignalVector denoise_ppg(const SignalVector &signal) { return denoise(signal); }

double mu_law(double x, double mu) {
  require(mu > 0.0, "mu must be positive");
  if (!(std::abs(x) <= 1.0))
    fail(ErrorKind::InvalidArgument, "input not normalized");
  return std::copysign(std::log1p(mu * std::abs(x)) / std::log1p(mu), x);
}

double mu_law_inverse(double y, double mu) {
  require(mu > 0.0, "mu must be positive");
  if (!(std::abs(y) <= 1.0))
    fail(ErrorKind::InvalidArgument, "input not normalized");
  return std::copysign(std::expm1(std::abs(y) * std::log1p(mu)) / mu, y);
}

std::vector<double> normalize_mu_law(std::span<const double> samples, double mu) {
  double peak = 0.0;
  for (double v : samples)
    peak = std::max(peak, std::abs(v));
  if (peak == 0.0)
    peak = 1.0;
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    out[i] = mu_law(std::clamp(samples[i] / peak, -1.0, 1.0), mu);
  return out;
}

} // namespace bpnet::signal
