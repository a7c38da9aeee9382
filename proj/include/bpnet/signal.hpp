// SPDX-License-Identifier: Apache-2.0
/**
 * @file   signal.hpp
 * @brief  Uniformly sampled waveforms and the ECG/PPG denoising chain.
 *
 * The chain runs at 1 kHz: upsample from the acquisition rate, split with a
 * 10-level bior6.8 DWT, drop D1-D3 (muscle/HF noise) and A10 (respiration and
 * baseline wander), reconstruct, notch 59.5-61.5 Hz with a zero-phase
 * band-stop, then return to the acquisition rate so the waveforms stay
 * sample-aligned with the ABP reference.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bpnet::signal {

struct SignalVector {
  double sample_rate_hz = 0.0;
  std::vector<double> samples;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

/// Throws InvalidArgument unless the rate is positive and every sample finite.
void validate(const SignalVector &signal);

/// Band-limited resampling to `target_hz`. Output length is
/// round(n * target / source). A Kaiser-windowed sinc low-pass at 0.9 of the
/// smaller Nyquist rate is evaluated directly at every output instant, so the
/// same kernel serves as interpolator (upsampling) and as anti-alias filter
/// ahead of decimation (downsampling). Both ends are extended by Burg linear
/// prediction before filtering.
SignalVector resample(const SignalVector &signal, double target_hz);

/// Extends `samples` past its last element by `count` predicted values using
/// an autoregressive model fitted with Burg's method to the trailing
/// `fit_length` samples (mean removed). Constant tails extend as constants.
std::vector<double> predict_tail(std::span<const double> samples,
                                 std::size_t count, std::size_t order = 16,
                                 std::size_t fit_length = 256);

/// One biquad section, a0 normalised to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

/// Digital Butterworth band-stop as cascaded biquads, designed by bilinear
/// transform with pre-warped band edges. `prototype_order` is the order of
/// the low-pass prototype; the band-stop has twice as many poles.
std::vector<Biquad> design_butterworth_bandstop(double sample_rate_hz,
                                                double low_hz, double high_hz,
                                                int prototype_order);

/// Magnitude response of a biquad cascade at `freq_hz`.
double cascade_gain(std::span<const Biquad> sections, double sample_rate_hz,
                    double freq_hz);

/// Forward-backward (zero-phase) filtering with odd-extension padding and
/// steady-state initial conditions, the usual filtfilt recipe.
std::vector<double> filtfilt(std::span<const Biquad> sections,
                             std::span<const double> samples,
                             std::size_t pad_length);

inline constexpr double kMainsStopLowHz = 59.5;
inline constexpr double kMainsStopHighHz = 61.5;
inline constexpr int kBandstopPrototypeOrder = 4;

/// Pole-radius settling length: samples until the slowest mode decays to
/// `tolerance` of its initial amplitude.
std::size_t settling_samples(std::span<const Biquad> sections, double tolerance);

/// Zero-phase Butterworth band-stop. Requires sample_rate_hz > 2 * high_hz.
/// Both ends are extended by Burg prediction over the settling length, so a
/// tone that ends mid-cycle continues without a phase jump; the result
/// is the mean of the forward-backward and backward-forward passes, so a
/// time-reversed input gives exactly the time-reversed output.
SignalVector bandstop_bidirectional(const SignalVector &signal,
                                    double low_hz = kMainsStopLowHz,
                                    double high_hz = kMainsStopHighHz);

inline constexpr double kProcessingRateHz = 1000.0;

/// Full denoising chain; output has the input's length and rate.
SignalVector denoise_ecg(const SignalVector &signal);
/// The PPG goes through the identical chain.
SignalVector denoise_ppg(const SignalVector &signal);

inline constexpr double kDefaultMu = 255.0;

/// sign(x) ln(1 + mu|x|) / ln(1 + mu); |x| must not exceed 1.
double mu_law(double x, double mu = kDefaultMu);
double mu_law_inverse(double y, double mu = kDefaultMu);

/// Divides by max|x| (1.0 for an all-zero slice) and applies mu_law.
std::vector<double> normalize_mu_law(std::span<const double> samples,
                                     double mu = kDefaultMu);

} // namespace bpnet::signal
