// SPDX-License-Identifier: Apache-2.0
#include <bpnet/signal.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <bpnet/error.hpp>

namespace bpnet::signal {
namespace {

using cplx = std::complex<double>;

double prewarp(double freq_hz, double sample_rate_hz) {
  return 2.0 * sample_rate_hz * std::tan(std::numbers::pi * freq_hz / sample_rate_hz);
}

// Direct form II transposed, in place, starting from state (z1, z2).
void run_section(const Biquad &s, std::vector<double> &x, double z1, double z2) {
  for (double &v : x) {
    const double in = v;
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    v = out;
  }
}

// State that makes a section output its DC gain for a constant unit input.
std::pair<double, double> step_state(const Biquad &s) {
  const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  const double z2 = s.b2 - s.a2 * gain;
  const double z1 = s.b1 - s.a1 * gain + z2;
  return {z1, z2};
}

void run_cascade(std::span<const Biquad> sections, std::vector<double> &x) {
  if (x.empty())
    return;
  double level = x.front();
  for (const auto &s : sections) {
    const auto [z1, z2] = step_state(s);
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    run_section(s, x, z1 * level, z2 * level);
    level *= gain;
  }
}

} // namespace

std::vector<Biquad> design_butterworth_bandstop(double sample_rate_hz,
                                                double low_hz, double high_hz,
                                                int prototype_order) {
  require(prototype_order >= 1, "band-stop order must be positive");
  require(low_hz > 0.0 && low_hz < high_hz, "band-stop edges must satisfy 0 < low < high");
  if (!(sample_rate_hz > 2.0 * high_hz))
    fail(ErrorKind::InvalidArgument, "Nyquist violation");

  const double w1 = prewarp(low_hz, sample_rate_hz);
  const double w2 = prewarp(high_hz, sample_rate_hz);
  const double bandwidth = w2 - w1;
  const double centre_sq = w1 * w2;
  const double k = 2.0 * sample_rate_hz;

  // Each prototype pole p maps to the two roots of s^2 - (B/p) s + w0^2 = 0.
  // Poles come in conjugate pairs, so keep the upper half-plane ones and
  // pair every analog pole with its conjugate.
  std::vector<cplx> analog;
  for (int m = 0; m < prototype_order; ++m) {
    const double theta = std::numbers::pi * (2.0 * m + prototype_order + 1) /
                         (2.0 * prototype_order);
    const cplx p = std::polar(1.0, theta);
    const cplx b = bandwidth / p;
    const cplx disc = std::sqrt(b * b - 4.0 * centre_sq);
    for (const cplx root : {(b + disc) / 2.0, (b - disc) / 2.0})
      if (root.imag() > 0.0)
        analog.push_back(root);
  }

  // Zeros at +/- j w0 map onto the unit circle.
  const cplx zero = (k + cplx(0.0, std::sqrt(centre_sq))) /
                    (k - cplx(0.0, std::sqrt(centre_sq)));

  std::vector<Biquad> sections;
  for (const cplx s : analog) {
    const cplx z = (k + s) / (k - s);
    Biquad q{};
    q.b0 = 1.0;
    q.b1 = -2.0 * zero.real();
    q.b2 = std::norm(zero);
    q.a1 = -2.0 * z.real();
    q.a2 = std::norm(z);
    const double dc = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    q.b0 /= dc;
    q.b1 /= dc;
    q.b2 /= dc;
    sections.push_back(q);
  }
  return sections;
}

double cascade_gain(std::span<const Biquad> sections, double sample_rate_hz,
                    double freq_hz) {
  const cplx z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate_hz);
  const cplx z2 = z1 * z1;
  cplx h = 1.0;
  for (const auto &s : sections)
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return std::abs(h);
}

namespace {

// Filters a padded signal forward then backward and returns the middle n samples.
std::vector<double> forward_backward(std::span<const Biquad> sections, std::vector<double> ext,
                                     std::size_t pad, std::size_t n) {
  run_cascade(sections, ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade(sections, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<long>(pad), ext.begin() + static_cast<long>(pad + n)};
}

// Burg-predicted continuation on both sides.
std::vector<double> predictive_extension(std::span<const double> x, std::size_t pad) {
  const std::vector<double> reversed(x.rbegin(), x.rend());
  const auto head = predict_tail(reversed, pad);
  const auto tail = predict_tail(x, pad);
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * pad);
  ext.insert(ext.end(), head.rbegin(), head.rend());
  ext.insert(ext.end(), x.begin(), x.end());
  ext.insert(ext.end(), tail.begin(), tail.end());
  return ext;
}

} // namespace

std::vector<double> filtfilt(std::span<const Biquad> sections,
                             std::span<const double> samples,
                             std::size_t pad_length) {
  const std::size_t n = samples.size();
  if (n == 0)
    return {};
  const std::size_t pad = std::min(pad_length, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i)
    ext.push_back(2.0 * samples.front() - samples[i]);
  ext.insert(ext.end(), samples.begin(), samples.end());
  for (std::size_t i = 1; i <= pad; ++i)
    ext.push_back(2.0 * samples.back() - samples[n - 1 - i]);
  return forward_backward(sections, std::move(ext), pad, n);
}

std::size_t settling_samples(std::span<const Biquad> sections, double tolerance) {
  double radius = 0.0;
  for (const auto &s : sections)
    radius = std::max(radius, std::sqrt(std::abs(s.a2)));
  if (radius <= 0.0)
    return 0;
  require(radius < 1.0, "unstable filter section");
  return static_cast<std::size_t>(std::ceil(std::log(tolerance) / std::log(radius)));
}

SignalVector bandstop_bidirectional(const SignalVector &signal, double low_hz,
                                    double high_hz) {
  validate(signal);
  const auto sections = design_butterworth_bandstop(
      signal.sample_rate_hz, low_hz, high_hz, kBandstopPrototypeOrder);
  const std::size_t pad = settling_samples(sections, 1e-9);
  const auto &x = signal.samples;
  const std::size_t n = x.size();

  // Forward-backward and backward-forward passes differ only in their edge
  // transients; averaging them makes the operator commute with time reversal.
  auto y = forward_backward(sections, predictive_extension(x, pad), pad, n);
  const std::vector<double> rev(x.rbegin(), x.rend());
  const auto yr = forward_backward(sections, predictive_extension(rev, pad), pad, n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = 0.5 * (y[i] + yr[n - 1 - i]);
  return {signal.sample_rate_hz, std::move(y)};
}

} // namespace bpnet::signal
