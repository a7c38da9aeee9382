// SPDX-License-Identifier: Apache-2.0
/**
 * @file   wavelet.cpp
 * @brief  bior6.8 filter bank and the multi-level DWT used for denoising.
 *
 * Index conventions: an analysis step evaluates
 *   a[o] = sum_j h[j] * x_ext(2o + 1 - j),  o < floor((n + F - 1) / 2)
 * over the half-sample symmetric extension of x, and a synthesis step keeps
 * samples F-2 ... F-2+n-1 of the full convolution of the zero-upsampled
 * coefficients with the synthesis filters.
 */
#include <bpnet/wavelet.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <bpnet/error.hpp>

namespace bpnet::signal {
namespace {

// Spline side: (1 + z)^6 times one quadratic factor of the degree-6
// Daubechies product polynomial; dual side takes the remaining factors.
// Values computed at 50-digit precision and rounded to double.
constexpr std::array<double, 6> kSynthesisHalf = {
    0.014426282505622247498, 0.01446750489677409885, -0.078722001062668716945,
    -0.040367979030381903749, 0.41784910915032023165, 0.7589077294537631342};

constexpr std::array<double, 9> kAnalysisHalf = {
    0.0019088317364850261524, -0.0019142861290808863435,
    -0.016990639867607099394, 0.011934565279726731368,
    0.049732903490937653558,  -0.077263173167211342143,
    -0.094059203495761629775, 0.42079628460983925932,
    0.82592299745843962332};

template <std::size_t N> std::vector<double> mirror(const std::array<double, N> &half) {
  std::vector<double> taps(half.begin(), half.end());
  for (std::size_t i = N - 1; i-- > 0;)
    taps.push_back(half[i]);
  return taps;
}

WaveletFilterBank make_bior68() {
  constexpr std::size_t kLength = 18;
  const auto analysis = mirror(kAnalysisHalf);   // 17 taps
  const auto synthesis = mirror(kSynthesisHalf); // 11 taps

  WaveletFilterBank bank;
  bank.decompose_lowpass.assign(kLength, 0.0);
  bank.reconstruct_lowpass.assign(kLength, 0.0);
  std::copy(analysis.begin(), analysis.end(), bank.decompose_lowpass.begin() + 1);
  std::copy(synthesis.begin(), synthesis.end(), bank.reconstruct_lowpass.begin() + 3);

  bank.decompose_highpass.resize(kLength);
  bank.reconstruct_highpass.resize(kLength);
  for (std::size_t n = 0; n < kLength; ++n) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    bank.decompose_highpass[n] = -sign * bank.reconstruct_lowpass[n];
    bank.reconstruct_highpass[n] = sign * bank.decompose_lowpass[n];
  }
  return bank;
}

// Half-sample symmetric extension: ... x1 x0 | x0 x1 ... x(n-1) | x(n-1) ...
double symmetric_at(std::span<const double> x, long m) {
  const long n = static_cast<long>(x.size());
  long r = m % (2 * n);
  if (r < 0)
    r += 2 * n;
  return r < n ? x[r] : x[2 * n - 1 - r];
}

} // namespace

const WaveletFilterBank &bior68() {
  static const WaveletFilterBank bank = make_bior68();
  return bank;
}

std::size_t dwt_coefficient_count(std::size_t n, std::size_t filter_length) {
  return (n + filter_length - 1) / 2;
}

void dwt_step(std::span<const double> x, const WaveletFilterBank &bank,
              std::vector<double> &approx, std::vector<double> &detail) {
  const std::size_t f = bank.length();
  const std::size_t count = dwt_coefficient_count(x.size(), f);

  // Materialise x_ext over [-(F-1), n+F-1) once.
  const long offset = static_cast<long>(f) - 1;
  std::vector<double> ext(x.size() + 2 * f);
  for (std::size_t k = 0; k < ext.size(); ++k)
    ext[k] = symmetric_at(x, static_cast<long>(k) - offset);

  approx.assign(count, 0.0);
  detail.assign(count, 0.0);
  const auto &lo = bank.decompose_lowpass;
  const auto &hi = bank.decompose_highpass;
  for (std::size_t o = 0; o < count; ++o) {
    const long centre = static_cast<long>(2 * o + 1) + offset;
    double a = 0.0, d = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
      const double v = ext[static_cast<std::size_t>(centre - static_cast<long>(j))];
      a += lo[j] * v;
      d += hi[j] * v;
    }
    approx[o] = a;
    detail[o] = d;
  }
}

std::vector<double> idwt_step(std::span<const double> approx,
                              std::span<const double> detail,
                              const WaveletFilterBank &bank,
                              std::size_t output_length) {
  const std::size_t f = bank.length();
  const std::size_t count = approx.size();
  if (detail.size() != count || count == 0 || output_length + f > 2 * count + 2)
    fail(ErrorKind::Data, "corrupt pyramid");

  std::vector<double> full(2 * count + f - 2, 0.0);
  const auto &lo = bank.reconstruct_lowpass;
  const auto &hi = bank.reconstruct_highpass;
  for (std::size_t k = 0; k < count; ++k) {
    const double a = approx[k], d = detail[k];
    double *dst = full.data() + 2 * k;
    for (std::size_t j = 0; j < f; ++j)
      dst[j] += a * lo[j] + d * hi[j];
  }
  return {full.begin() + static_cast<long>(f - 2),
          full.begin() + static_cast<long>(f - 2 + output_length)};
}

WaveletPyramid dwt_decompose(const SignalVector &signal,
                             const WaveletFilterBank &bank, int levels) {
  validate(signal);
  require(levels >= 1, "levels must be positive");

  WaveletPyramid pyramid;
  pyramid.sample_rate_hz = signal.sample_rate_hz;
  std::vector<double> current = signal.samples;
  for (int level = 0; level < levels; ++level) {
    if (current.size() < bank.length())
      fail(ErrorKind::InvalidArgument,
           "signal too short for " + std::to_string(levels) + " levels");
    pyramid.level_lengths.push_back(current.size());
    std::vector<double> approx, detail;
    dwt_step(current, bank, approx, detail);
    pyramid.details.push_back(std::move(detail));
    current = std::move(approx);
  }
  pyramid.approximation = std::move(current);
  return pyramid;
}

SignalVector idwt_reconstruct(const WaveletPyramid &pyramid,
                              const WaveletFilterBank &bank) {
  const std::size_t levels = pyramid.details.size();
  if (levels == 0 || pyramid.level_lengths.size() != levels)
    fail(ErrorKind::Data, "corrupt pyramid");
  for (std::size_t k = 0; k < levels; ++k) {
    if (pyramid.details[k].size() !=
        dwt_coefficient_count(pyramid.level_lengths[k], bank.length()))
      fail(ErrorKind::Data, "corrupt pyramid");
    if (k + 1 < levels &&
        pyramid.level_lengths[k + 1] != pyramid.details[k].size())
      fail(ErrorKind::Data, "corrupt pyramid");
  }
  if (pyramid.approximation.size() != pyramid.details.back().size())
    fail(ErrorKind::Data, "corrupt pyramid");

  std::vector<double> current = pyramid.approximation;
  for (std::size_t k = levels; k-- > 0;)
    current = idwt_step(current, pyramid.details[k], bank,
                        pyramid.level_lengths[k]);
  return {pyramid.sample_rate_hz, std::move(current)};
}

WaveletPyramid threshold_coefficients(WaveletPyramid pyramid) {
  constexpr std::size_t kDiscardedDetails = 3;
  for (std::size_t k = 0; k < std::min(kDiscardedDetails, pyramid.details.size()); ++k)
    std::fill(pyramid.details[k].begin(), pyramid.details[k].end(), 0.0);
  std::fill(pyramid.approximation.begin(), pyramid.approximation.end(), 0.0);
  return pyramid;
}

double pyramid_energy(const WaveletPyramid &pyramid) {
  double total = 0.0;
  for (const auto &band : pyramid.details)
    for (double c : band)
      total += c * c;
  for (double c : pyramid.approximation)
    total += c * c;
  return total;
}

} // namespace bpnet::signal
