// SPDX-License-Identifier: Apache-2.0
/**
 * @file   report.hpp
 * @brief  Report directory writer: metrics.json, four CSV tables and four
 *         SVG figures. Output text is a pure function of its inputs.
 */
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <bpnet/metrics.hpp>

namespace bpnet::report {

/// Predictions for one subject plus where the segment starts in its record.
struct TrackedSubject {
  metrics::SubjectPredictions predictions;
  std::size_t start_index = 0;
  double sample_rate_hz = 125.0;
};

std::string bhs_csv(const metrics::EvalReport &report);
std::string bland_altman_csv(const std::vector<TrackedSubject> &subjects,
                             const metrics::EvalReport &report);
std::string histogram_csv(const metrics::EvalReport &report);
std::string tracking_csv(const std::vector<TrackedSubject> &subjects);

std::string tracking_svg(const std::vector<TrackedSubject> &subjects);
std::string histogram_svg(const metrics::EvalReport &report);
std::string bland_altman_svg(const std::vector<TrackedSubject> &subjects,
                             const metrics::EvalReport &report);
std::string regression_svg(const std::vector<TrackedSubject> &subjects,
                           const metrics::EvalReport &report);

/// File names written by write_report, in write order.
const std::vector<std::string> &report_files();

/// Builds the report and writes every file atomically into `dir`.
metrics::EvalReport write_report(const std::filesystem::path &dir,
                                 const std::vector<TrackedSubject> &subjects);

} // namespace bpnet::report
