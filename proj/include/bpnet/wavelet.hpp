// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <bpnet/signal.hpp>

namespace bpnet::signal {

/// Analysis/synthesis filter pair for a two-channel filter bank. All four
/// filters share one length; shorter filters are zero padded so that the
/// decomposition and reconstruction index conventions line up.
struct WaveletFilterBank {
  std::vector<double> decompose_lowpass;
  std::vector<double> decompose_highpass;
  std::vector<double> reconstruct_lowpass;
  std::vector<double> reconstruct_highpass;

  std::size_t length() const noexcept { return decompose_lowpass.size(); }
};

/// Cohen-Daubechies-Feauveau 17/11 biorthogonal spline filters (bior6.8).
const WaveletFilterBank &bior68();

inline constexpr int kDecompositionLevels = 10;

struct WaveletPyramid {
  /// details[0] is D1 (finest) ... details[9] is D10.
  std::vector<std::vector<double>> details;
  /// A10.
  std::vector<double> approximation;
  /// Input length at each level; level_lengths[0] is the original length.
  std::vector<std::size_t> level_lengths;
  double sample_rate_hz = 0.0;

  std::size_t original_length() const {
    return level_lengths.empty() ? 0 : level_lengths.front();
  }
  int levels() const noexcept { return static_cast<int>(details.size()); }
};

/// Number of coefficients one analysis step produces from n samples.
std::size_t dwt_coefficient_count(std::size_t n, std::size_t filter_length);

/// Single analysis step with half-sample symmetric extension.
void dwt_step(std::span<const double> x, const WaveletFilterBank &bank,
              std::vector<double> &approx, std::vector<double> &detail);

/// Single synthesis step; returns `output_length` samples.
std::vector<double> idwt_step(std::span<const double> approx,
                              std::span<const double> detail,
                              const WaveletFilterBank &bank,
                              std::size_t output_length);

WaveletPyramid dwt_decompose(const SignalVector &signal,
                             const WaveletFilterBank &bank = bior68(),
                             int levels = kDecompositionLevels);

SignalVector idwt_reconstruct(const WaveletPyramid &pyramid,
                              const WaveletFilterBank &bank = bior68());

/// Zeroes D1, D2, D3 and A10, leaving D4..D10 untouched.
WaveletPyramid threshold_coefficients(WaveletPyramid pyramid);

/// Sum of squares over every coefficient vector.
double pyramid_energy(const WaveletPyramid &pyramid);

} // namespace bpnet::signal
