// SPDX-License-Identifier: Apache-2.0
/**
 * @file   dataset.hpp
 * @brief  Subject records, SBP/DBP target extraction, chronological splits
 *         and training windows.
 *
 * Record CSV: header `t,ecg,ppg,abp`, one row per sample at 125 Hz, `t` in
 * seconds advancing by 0.008. A dataset directory holds `<subject_id>.csv`
 * files plus `manifest.csv` with columns `subject_id,ecg_lead`.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <bpnet/signal.hpp>

namespace bpnet::data {

using signal::SignalVector;

inline constexpr double kRecordRateHz = 125.0;

struct SubjectRecord {
  std::string subject_id;
  std::string ecg_lead = "II";
  SignalVector ecg, ppg, abp;

  std::size_t size() const noexcept { return abp.size(); }
};

/// Throws Data unless the three waveforms are equally long, finite and 125 Hz.
void validate(const SubjectRecord &record);

struct TargetSeries {
  std::vector<double> sbp, dbp; ///< mmHg, one value per sample
  std::size_t size() const noexcept { return sbp.size(); }
};

/// One detected cardiac cycle in an ABP trace.
struct Beat {
  std::size_t index; ///< sample of the extremum
  double value;      ///< mmHg
};

struct PeakOptions {
  std::size_t min_distance = 1; ///< samples between kept peaks
  double min_prominence = 0.0;
};

/// Local maxima filtered by distance (tallest first) then prominence,
/// returned in index order. Plateaus report their middle sample.
std::vector<std::size_t> find_peaks(std::span<const double> x, const PeakOptions &options);

struct BeatExtraction {
  std::vector<Beat> systolic;
  std::vector<Beat> diastolic;
};

inline constexpr double kMinBeatSpacingS = 0.33;
inline constexpr double kMinPulseProminenceMmhg = 10.0;
inline constexpr double kMinAbpDurationS = 3.0;
inline constexpr double kTargetFloorMmhg = 20.0;
inline constexpr double kTargetCeilingMmhg = 260.0;

BeatExtraction detect_beats(const SignalVector &abp);

/// Per-beat systolic maxima and diastolic minima, each held constant from
/// its sample until the next beat (values before the first beat take the
/// first beat's value). Errors with "no pulsatile ABP" when no beats exist.
TargetSeries extract_bp_targets(const SignalVector &abp);

struct SplitSpec {
  double train_fraction = 0.70;
  double valid_fraction = 0.10;
  double test_fraction = 0.20;
};

/// Half-open sample range [begin, end).
struct Segment {
  std::size_t begin = 0, end = 0;
  std::size_t size() const noexcept { return end - begin; }
};

struct Split {
  Segment train, valid, test;
};

/// Chronological, contiguous split. Each segment must hold at least
/// `min_segment` samples.
Split split_record(std::size_t length, const SplitSpec &spec = {},
                   std::size_t min_segment = 1);

struct WindowedExample {
  std::vector<double> ecg, ppg;            ///< max-abs normalised then mu-law
  std::vector<double> sbp_target, dbp_target; ///< scaled to [0, 1]
  std::string subject_id;
  std::size_t start_index = 0; ///< absolute sample index in the record
};

inline constexpr std::size_t kDefaultWindowLen = 1024;
inline constexpr std::size_t kDefaultStride = 256;

/// Windows at segment.begin + k * stride that fit inside the segment.
std::vector<WindowedExample> make_windows(const SubjectRecord &record,
                                          const TargetSeries &targets,
                                          const Segment &segment, std::size_t window_len,
                                          std::size_t stride);

// File formats.

SubjectRecord load_record(const std::filesystem::path &path);
SubjectRecord parse_record(const std::string &text, const std::string &subject_id);
void save_record(const SubjectRecord &record, const std::filesystem::path &path);
std::string format_record(const SubjectRecord &record);

struct ManifestEntry {
  std::string subject_id;
  std::string ecg_lead;
};

std::vector<ManifestEntry> load_manifest(const std::filesystem::path &path);
void save_manifest(const std::vector<ManifestEntry> &entries, const std::filesystem::path &path);

/// Loads every subject listed in `dir/manifest.csv`.
std::vector<SubjectRecord> load_dataset(const std::filesystem::path &dir);

/// Writes `contents` next to `path` and renames it into place.
void write_file_atomic(const std::filesystem::path &path, const std::string &contents);

} // namespace bpnet::data
