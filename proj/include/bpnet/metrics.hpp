// SPDX-License-Identifier: Apache-2.0
/**
 * @file   metrics.hpp
 * @brief  Error statistics, AAMI and BHS checks, Bland-Altman agreement,
 *         Pearson correlation, error histograms and the evaluation report.
 *
 * Errors are always estimate - reference. Standard deviations use the
 * sample (n - 1) denominator and are 0 for a single value.
 */
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bpnet::metrics {

struct ErrorStats {
  double me = 0.0, sde = 0.0, rmse = 0.0, mae = 0.0;
  std::size_t n = 0;

  bool operator==(const ErrorStats &) const = default;
};

ErrorStats error_stats(std::span<const double> ref, std::span<const double> est);

std::vector<double> errors(std::span<const double> ref, std::span<const double> est);

inline constexpr double kAamiMaxAbsMeanError = 5.0;
inline constexpr double kAamiMaxSde = 8.0;
inline constexpr std::size_t kAamiMinSubjects = 85;

struct AamiVerdict {
  bool pass = true;
  std::vector<std::string> reasons; ///< one entry per failed clause

  bool operator==(const AamiVerdict &) const = default;
};

AamiVerdict aami_check(const ErrorStats &stats, std::size_t n_subjects);

/// Minimum cumulative percentages within 5/10/15 mmHg for each grade.
struct BhsCutoff {
  char grade;
  double within_5, within_10, within_15;
};
inline constexpr BhsCutoff kBhsCutoffs[] = {
    {'A', 60.0, 85.0, 95.0},
    {'B', 50.0, 75.0, 90.0},
    {'C', 40.0, 65.0, 85.0},
};

struct BhsResult {
  double pct_within_5 = 0.0, pct_within_10 = 0.0, pct_within_15 = 0.0;
  char grade = 'D';

  bool operator==(const BhsResult &) const = default;
};

BhsResult bhs_grade(std::span<const double> errors);

struct BlandAltmanLimits {
  double mean_diff = 0.0, sd_diff = 0.0, loa_low = 0.0, loa_high = 0.0;

  bool operator==(const BlandAltmanLimits &) const = default;
};

struct BlandAltmanPoint {
  double mean, diff; ///< (ref + est) / 2, est - ref
};

struct BlandAltmanResult {
  BlandAltmanLimits limits;
  std::vector<BlandAltmanPoint> points;
};

inline constexpr double kLoaZ = 1.96;

BlandAltmanResult bland_altman(std::span<const double> ref, std::span<const double> est);

/// Throws Numeric "undefined correlation" when either series is constant.
double pearson_r(std::span<const double> ref, std::span<const double> est);

struct Histogram {
  double bin_width = 0.0;
  std::vector<double> bin_low;       ///< left edge of each bin
  std::vector<std::size_t> counts;

  bool operator==(const Histogram &) const = default;
};

/// Bins centred on integer multiples of `bin_width`, from the bin holding
/// min(errors) to the bin holding max(errors).
Histogram error_histogram(std::span<const double> errors, double bin_width);

struct SubjectPredictions {
  std::string subject_id;
  std::vector<double> sbp_ref, sbp_est, dbp_ref, dbp_est;
};

struct SubjectStats {
  std::string subject_id;
  ErrorStats sbp, dbp;

  bool operator==(const SubjectStats &) const = default;
};

struct ChannelReport {
  ErrorStats combined;         ///< over all samples stacked together
  ErrorStats subject_average;  ///< field-wise mean of per-subject stats (n = total)
  AamiVerdict aami;
  BhsResult bhs;
  BlandAltmanLimits bland_altman;
  std::optional<double> pearson_r;
  Histogram histogram;

  bool operator==(const ChannelReport &) const = default;
};

struct EvalReport {
  std::vector<SubjectStats> subjects;
  ChannelReport sbp, dbp;

  bool operator==(const EvalReport &) const = default;
};

inline constexpr double kHistogramBinWidth = 1.0;

EvalReport build_report(const std::vector<SubjectPredictions> &subjects,
                        double histogram_bin_width = kHistogramBinWidth);

std::string report_to_json(const EvalReport &report);
EvalReport report_from_json(const std::string &text);

} // namespace bpnet::metrics
