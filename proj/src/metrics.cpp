// SPDX-License-Identifier: Apache-2.0
#include <bpnet/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include <bpnet/error.hpp>

namespace bpnet::metrics {
namespace {

using nlohmann::json;

void check_pair(std::span<const double> ref, std::span<const double> est, const char *what) {
  if (ref.size() != est.size())
    fail(ErrorKind::InvalidArgument, std::string(what) + ": length mismatch (" +
                                         std::to_string(ref.size()) + " vs " +
                                         std::to_string(est.size()) + ")");
  if (ref.empty())
    fail(ErrorKind::InvalidArgument, std::string(what) + ": empty series");
}

double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x)
    s += v;
  return s / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x, double mu) {
  if (x.size() < 2)
    return 0.0;
  double ss = 0.0;
  for (double v : x)
    ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

} // namespace

std::vector<double> errors(std::span<const double> ref, std::span<const double> est) {
  check_pair(ref, est, "errors");
  std::vector<double> e(ref.size());
  for (std::size_t i = 0; i < e.size(); ++i)
    e[i] = est[i] - ref[i];
  return e;
}

ErrorStats error_stats(std::span<const double> ref, std::span<const double> est) {
  check_pair(ref, est, "error_stats");
  const auto e = errors(ref, est);
  ErrorStats s;
  s.n = e.size();
  s.me = mean(e);
  s.sde = sample_sd(e, s.me);
  double sq = 0.0, ab = 0.0;
  for (double v : e) {
    sq += v * v;
    ab += std::abs(v);
  }
  s.rmse = std::sqrt(sq / static_cast<double>(s.n));
  s.mae = ab / static_cast<double>(s.n);
  return s;
}

AamiVerdict aami_check(const ErrorStats &stats, std::size_t n_subjects) {
  AamiVerdict v;
  char buf[128];
  if (!(std::abs(stats.me) <= kAamiMaxAbsMeanError)) {
    std::snprintf(buf, sizeof buf, "ME %.3f mmHg exceeds +/-%.0f mmHg", stats.me,
                  kAamiMaxAbsMeanError);
    v.reasons.emplace_back(buf);
  }
  if (!(stats.sde <= kAamiMaxSde)) {
    std::snprintf(buf, sizeof buf, "SDE %.3f mmHg exceeds %.0f mmHg", stats.sde, kAamiMaxSde);
    v.reasons.emplace_back(buf);
  }
  if (n_subjects < kAamiMinSubjects) {
    std::snprintf(buf, sizeof buf, "population of %zu subjects is below %zu", n_subjects,
                  kAamiMinSubjects);
    v.reasons.emplace_back(buf);
  }
  v.pass = v.reasons.empty();
  return v;
}

BhsResult bhs_grade(std::span<const double> errors) {
  require(!errors.empty(), "bhs_grade: empty series");
  std::size_t w5 = 0, w10 = 0, w15 = 0;
  for (double e : errors) {
    const double a = std::abs(e);
    w5 += a <= 5.0;
    w10 += a <= 10.0;
    w15 += a <= 15.0;
  }
  const auto n = static_cast<double>(errors.size());
  BhsResult r{100.0 * static_cast<double>(w5) / n, 100.0 * static_cast<double>(w10) / n,
              100.0 * static_cast<double>(w15) / n, 'D'};
  for (const auto &c : kBhsCutoffs) {
    if (r.pct_within_5 >= c.within_5 && r.pct_within_10 >= c.within_10 &&
        r.pct_within_15 >= c.within_15) {
      r.grade = c.grade;
      break;
    }
  }
  return r;
}

BlandAltmanResult bland_altman(std::span<const double> ref, std::span<const double> est) {
  check_pair(ref, est, "bland_altman");
  const auto d = errors(ref, est);
  BlandAltmanResult r;
  r.limits.mean_diff = mean(d);
  r.limits.sd_diff = sample_sd(d, r.limits.mean_diff);
  r.limits.loa_low = r.limits.mean_diff - kLoaZ * r.limits.sd_diff;
  r.limits.loa_high = r.limits.mean_diff + kLoaZ * r.limits.sd_diff;
  r.points.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    r.points.push_back({0.5 * (ref[i] + est[i]), d[i]});
  return r;
}

double pearson_r(std::span<const double> ref, std::span<const double> est) {
  check_pair(ref, est, "pearson_r");
  const double mx = mean(ref), my = mean(est);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double dx = ref[i] - mx, dy = est[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    fail(ErrorKind::Numeric, "undefined correlation");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Histogram error_histogram(std::span<const double> errors, double bin_width) {
  require(!errors.empty(), "error_histogram: empty series");
  require(bin_width > 0.0 && std::isfinite(bin_width), "error_histogram: bin width must be > 0");
  const auto bin_of = [&](double e) { return std::llround(e / bin_width); };
  const auto [lo, hi] = std::minmax_element(errors.begin(), errors.end());
  const long long first = bin_of(*lo), last = bin_of(*hi);
  Histogram h;
  h.bin_width = bin_width;
  h.counts.assign(static_cast<std::size_t>(last - first + 1), 0);
  for (long long k = first; k <= last; ++k)
    h.bin_low.push_back((static_cast<double>(k) - 0.5) * bin_width);
  for (double e : errors)
    ++h.counts[static_cast<std::size_t>(bin_of(e) - first)];
  return h;
}

namespace {

ChannelReport channel(const std::vector<SubjectPredictions> &subjects,
                      const std::vector<ErrorStats> &per_subject, bool systolic,
                      double bin_width) {
  std::vector<double> ref, est;
  for (const auto &s : subjects) {
    const auto &r = systolic ? s.sbp_ref : s.dbp_ref;
    const auto &e = systolic ? s.sbp_est : s.dbp_est;
    ref.insert(ref.end(), r.begin(), r.end());
    est.insert(est.end(), e.begin(), e.end());
  }
  ChannelReport c;
  c.combined = error_stats(ref, est);
  for (const auto &s : per_subject) {
    c.subject_average.me += s.me;
    c.subject_average.sde += s.sde;
    c.subject_average.rmse += s.rmse;
    c.subject_average.mae += s.mae;
    c.subject_average.n += s.n;
  }
  const auto k = static_cast<double>(per_subject.size());
  c.subject_average.me /= k;
  c.subject_average.sde /= k;
  c.subject_average.rmse /= k;
  c.subject_average.mae /= k;

  c.aami = aami_check(c.combined, subjects.size());
  const auto e = errors(ref, est);
  c.bhs = bhs_grade(e);
  c.bland_altman = bland_altman(ref, est).limits;
  try {
    c.pearson_r = pearson_r(ref, est);
  } catch (const Error &) {
    c.pearson_r.reset();
  }
  c.histogram = error_histogram(e, bin_width);
  return c;
}

json to_json(const ErrorStats &s) {
  return {{"me", s.me}, {"sde", s.sde}, {"rmse", s.rmse}, {"mae", s.mae}, {"n", s.n}};
}

ErrorStats stats_from(const json &j) {
  return {j.at("me").get<double>(), j.at("sde").get<double>(), j.at("rmse").get<double>(),
          j.at("mae").get<double>(), j.at("n").get<std::size_t>()};
}

json to_json(const ChannelReport &c) {
  return {{"combined", to_json(c.combined)},
          {"subject_average", to_json(c.subject_average)},
          {"aami", {{"pass", c.aami.pass}, {"reasons", c.aami.reasons}}},
          {"bhs",
           {{"pct_within_5", c.bhs.pct_within_5},
            {"pct_within_10", c.bhs.pct_within_10},
            {"pct_within_15", c.bhs.pct_within_15},
            {"grade", std::string(1, c.bhs.grade)}}},
          {"bland_altman",
           {{"mean_diff", c.bland_altman.mean_diff},
            {"sd_diff", c.bland_altman.sd_diff},
            {"loa_low", c.bland_altman.loa_low},
            {"loa_high", c.bland_altman.loa_high}}},
          {"pearson_r", c.pearson_r ? json(*c.pearson_r) : json(nullptr)},
          {"histogram",
           {{"bin_width", c.histogram.bin_width},
            {"bin_low", c.histogram.bin_low},
            {"counts", c.histogram.counts}}}};
}

ChannelReport channel_from(const json &j) {
  ChannelReport c;
  c.combined = stats_from(j.at("combined"));
  c.subject_average = stats_from(j.at("subject_average"));
  c.aami.pass = j.at("aami").at("pass").get<bool>();
  c.aami.reasons = j.at("aami").at("reasons").get<std::vector<std::string>>();
  const auto &b = j.at("bhs");
  c.bhs.pct_within_5 = b.at("pct_within_5").get<double>();
  c.bhs.pct_within_10 = b.at("pct_within_10").get<double>();
  c.bhs.pct_within_15 = b.at("pct_within_15").get<double>();
  const auto grade = b.at("grade").get<std::string>();
  if (grade.size() != 1)
    fail(ErrorKind::Data, "metrics: malformed BHS grade");
  c.bhs.grade = grade[0];
  const auto &ba = j.at("bland_altman");
  c.bland_altman = {ba.at("mean_diff").get<double>(), ba.at("sd_diff").get<double>(),
                    ba.at("loa_low").get<double>(), ba.at("loa_high").get<double>()};
  if (!j.at("pearson_r").is_null())
    c.pearson_r = j.at("pearson_r").get<double>();
  const auto &h = j.at("histogram");
  c.histogram.bin_width = h.at("bin_width").get<double>();
  c.histogram.bin_low = h.at("bin_low").get<std::vector<double>>();
  c.histogram.counts = h.at("counts").get<std::vector<std::size_t>>();
  return c;
}

} // namespace

EvalReport build_report(const std::vector<SubjectPredictions> &subjects,
                        double histogram_bin_width) {
  require(!subjects.empty(), "build_report: no subjects");
  EvalReport report;
  std::vector<ErrorStats> sbp, dbp;
  for (const auto &s : subjects) {
    SubjectStats st{s.subject_id, error_stats(s.sbp_ref, s.sbp_est),
                    error_stats(s.dbp_ref, s.dbp_est)};
    sbp.push_back(st.sbp);
    dbp.push_back(st.dbp);
    report.subjects.push_back(std::move(st));
  }
  report.sbp = channel(subjects, sbp, true, histogram_bin_width);
  report.dbp = channel(subjects, dbp, false, histogram_bin_width);
  return report;
}

std::string report_to_json(const EvalReport &report) {
  json subjects = json::array();
  for (const auto &s : report.subjects)
    subjects.push_back({{"subject_id", s.subject_id}, {"sbp", to_json(s.sbp)},
                        {"dbp", to_json(s.dbp)}});
  const json doc{{"format", "bpnet-eval-report"},
                 {"format_version", 1},
                 {"units", "mmHg"},
                 {"error_convention", "estimate - reference"},
                 {"n_subjects", report.subjects.size()},
                 {"subjects", std::move(subjects)},
                 {"sbp", to_json(report.sbp)},
                 {"dbp", to_json(report.dbp)}};
  return doc.dump(2) + "\n";
}

EvalReport report_from_json(const std::string &text) {
  try {
    const json doc = json::parse(text);
    if (doc.value("format", std::string()) != "bpnet-eval-report")
      fail(ErrorKind::Data, "metrics: not an evaluation report");
    EvalReport r;
    for (const auto &s : doc.at("subjects"))
      r.subjects.push_back({s.at("subject_id").get<std::string>(), stats_from(s.at("sbp")),
                            stats_from(s.at("dbp"))});
    r.sbp = channel_from(doc.at("sbp"));
    r.dbp = channel_from(doc.at("dbp"));
    return r;
  } catch (const json::exception &e) {
    fail(ErrorKind::Data, std::string("metrics: malformed report (") + e.what() + ")");
  }
}

} // namespace bpnet::metrics
