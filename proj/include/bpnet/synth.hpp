// SPDX-License-Identifier: Apache-2.0
/**
 * @file   synth.hpp
 * @brief  Synthetic ECG/PPG/ABP subjects whose per-beat blood pressure is an
 *         affine function of the inverse pulse-arrival lag.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <bpnet/dataset.hpp>

namespace bpnet::data {

inline constexpr double kSynthMinDurationS = 30.0;

/// SBP = a + b / tau, DBP = c + d / tau, tau in seconds.
inline constexpr double kSbpIntercept = 47.0, kSbpSlope = 17.5;
inline constexpr double kDbpIntercept = 33.4, kDbpSlope = 8.77;
inline constexpr double kBeatNoiseMmhg = 1.0;

struct SynthOptions {
  std::uint64_t seed = 0;
  double duration_s = 120.0;
  double heart_rate_hz = 1.2;
  /// When set, tau stays at this value (seconds) instead of drifting.
  double fixed_lag_s = 0.0;
};

struct GroundTruthBeat {
  std::size_t r_peak = 0;   ///< ECG R-peak sample
  std::size_t foot = 0;     ///< ABP trough sample
  std::size_t peak = 0;     ///< ABP systolic sample
  double lag_s = 0.0;       ///< pulse-arrival lag tau
  double sbp = 0.0, dbp = 0.0;
};

struct SynthSubject {
  SubjectRecord record;
  TargetSeries targets;             ///< zero-order hold of the per-beat truth
  std::vector<GroundTruthBeat> beats; ///< beats whose R peak lies in the record
};

SynthSubject synth_subject(const std::string &subject_id, const SynthOptions &options);

/// CSV with header `beat,r_peak,foot,peak,lag_s,sbp,dbp`.
std::string format_ground_truth(const std::vector<GroundTruthBeat> &beats);

} // namespace bpnet::data
