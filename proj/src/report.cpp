// SPDX-License-Identifier: Apache-2.0
#include <bpnet/report.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <bpnet/dataset.hpp>
#include <bpnet/error.hpp>

namespace bpnet::report {
namespace {

using metrics::ChannelReport;
using metrics::EvalReport;

constexpr std::size_t kMaxPlotPoints = 2000;

std::string fmt(const char *spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string num(double v) { return fmt("%.6f", v); }

struct Range {
  double lo, hi;
};

Range range_of(const std::vector<double> &v) {
  if (v.empty())
    return {0.0, 1.0};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*lo == *hi)
    return {*lo - 1.0, *hi + 1.0};
  const double pad = 0.05 * (*hi - *lo);
  return {*lo - pad, *hi + pad};
}

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0})
    if (m * mag >= raw)
      return m * mag;
  return 10.0 * mag;
}

class Svg {
public:
  Svg(int width, int height) {
    out_ = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
           " " + std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  void raw(const std::string &s) { out_ += s; }
  std::string finish() { return out_ + "</svg>\n"; }

private:
  std::string out_;
};

struct Panel {
  double x0, y0, w, h;
  Range xr, yr;

  double X(double x) const { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * w; }
  double Y(double y) const { return y0 + h - (y - yr.lo) / (yr.hi - yr.lo) * h; }
};

std::string c2(double v) { return fmt("%.2f", v); }

std::string escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

void text(Svg &svg, double x, double y, const std::string &s, const char *anchor = "middle",
          const char *extra = "") {
  svg.raw("<text x=\"" + c2(x) + "\" y=\"" + c2(y) + "\" text-anchor=\"" + anchor + "\"" +
          extra + ">" + escape(s) + "</text>\n");
}

void axes(Svg &svg, const Panel &p, const std::string &title, const std::string &xlabel,
          const std::string &ylabel) {
  svg.raw("<rect x=\"" + c2(p.x0) + "\" y=\"" + c2(p.y0) + "\" width=\"" + c2(p.w) +
          "\" height=\"" + c2(p.h) + "\" fill=\"none\" stroke=\"black\"/>\n");
  text(svg, p.x0 + p.w / 2, p.y0 - 8, title, "middle", " font-weight=\"bold\"");
  text(svg, p.x0 + p.w / 2, p.y0 + p.h + 32, xlabel);
  const double ly = p.y0 + p.h / 2;
  svg.raw("<text x=\"" + c2(p.x0 - 42) + "\" y=\"" + c2(ly) +
          "\" text-anchor=\"middle\" transform=\"rotate(-90 " + c2(p.x0 - 42) + " " + c2(ly) +
          ")\">" + ylabel + "</text>\n");

  const double xs = nice_step(p.xr.hi - p.xr.lo);
  for (double t = std::ceil(p.xr.lo / xs) * xs; t <= p.xr.hi; t += xs) {
    const double x = p.X(t);
    svg.raw("<line x1=\"" + c2(x) + "\" y1=\"" + c2(p.y0 + p.h) + "\" x2=\"" + c2(x) +
            "\" y2=\"" + c2(p.y0 + p.h + 4) + "\" stroke=\"black\"/>\n");
    text(svg, x, p.y0 + p.h + 16, fmt("%g", std::abs(t) < 1e-9 * xs ? 0.0 : t));
  }
  const double ys = nice_step(p.yr.hi - p.yr.lo);
  for (double t = std::ceil(p.yr.lo / ys) * ys; t <= p.yr.hi; t += ys) {
    const double y = p.Y(t);
    svg.raw("<line x1=\"" + c2(p.x0 - 4) + "\" y1=\"" + c2(y) + "\" x2=\"" + c2(p.x0) +
            "\" y2=\"" + c2(y) + "\" stroke=\"black\"/>\n");
    text(svg, p.x0 - 6, y + 4, fmt("%g", std::abs(t) < 1e-9 * ys ? 0.0 : t), "end");
  }
}

void polyline(Svg &svg, const Panel &p, const std::vector<double> &xs,
              const std::vector<double> &ys, const char *color, const char *dash = nullptr) {
  std::string pts;
  for (std::size_t i = 0; i < xs.size(); ++i)
    pts += c2(p.X(xs[i])) + "," + c2(p.Y(ys[i])) + " ";
  if (!pts.empty())
    pts.pop_back();
  svg.raw("<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.2\"" +
          (dash ? std::string(" stroke-dasharray=\"") + dash + "\"" : std::string()) +
          " points=\"" + pts + "\"/>\n");
}

void dots(Svg &svg, const Panel &p, const std::vector<double> &xs, const std::vector<double> &ys,
          const char *color) {
  for (std::size_t i = 0; i < xs.size(); ++i)
    svg.raw("<circle cx=\"" + c2(p.X(xs[i])) + "\" cy=\"" + c2(p.Y(ys[i])) + "\" r=\"1.5\" fill=\"" +
            color + "\" fill-opacity=\"0.5\"/>\n");
}

void legend(Svg &svg, double x, double y, const std::vector<std::pair<std::string, const char *>> &items) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double yy = y + 14.0 * static_cast<double>(i);
    svg.raw("<line x1=\"" + c2(x) + "\" y1=\"" + c2(yy) + "\" x2=\"" + c2(x + 18) + "\" y2=\"" +
            c2(yy) + "\" stroke=\"" + items[i].second + "\" stroke-width=\"2\"/>\n");
    text(svg, x + 22, yy + 4, items[i].first, "start");
  }
}

// Every k-th element so that at most kMaxPlotPoints remain.
std::vector<double> thin(const std::vector<double> &v) {
  const std::size_t k = std::max<std::size_t>(1, (v.size() + kMaxPlotPoints - 1) / kMaxPlotPoints);
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); i += k)
    out.push_back(v[i]);
  return out;
}

struct Stacked {
  std::vector<double> ref, est;
};

Stacked stack(const std::vector<TrackedSubject> &subjects, bool systolic) {
  Stacked s;
  for (const auto &t : subjects) {
    const auto &p = t.predictions;
    const auto &r = systolic ? p.sbp_ref : p.dbp_ref;
    const auto &e = systolic ? p.sbp_est : p.dbp_est;
    s.ref.insert(s.ref.end(), r.begin(), r.end());
    s.est.insert(s.est.end(), e.begin(), e.end());
  }
  return s;
}

const ChannelReport &channel(const EvalReport &r, bool systolic) {
  return systolic ? r.sbp : r.dbp;
}

const char *name(bool systolic) { return systolic ? "SBP" : "DBP"; }

Panel panel_at(int column, Range xr, Range yr) {
  return {70.0 + 450.0 * column, 40.0, 360.0, 300.0, xr, yr};
}

} // namespace

std::string bhs_csv(const EvalReport &report) {
  std::string out = "channel,pct_within_5,pct_within_10,pct_within_15,grade\n";
  for (bool sys : {true, false}) {
    const auto &b = channel(report, sys).bhs;
    out += std::string(sys ? "sbp" : "dbp") + "," + num(b.pct_within_5) + "," +
           num(b.pct_within_10) + "," + num(b.pct_within_15) + "," + b.grade + "\n";
  }
  return out;
}

std::string bland_altman_csv(const std::vector<TrackedSubject> &subjects,
                             const EvalReport &report) {
  std::string out = "channel,kind,mean,diff\n";
  for (bool sys : {true, false}) {
    const std::string ch = sys ? "sbp" : "dbp";
    const auto &l = channel(report, sys).bland_altman;
    out += ch + ",mean_diff,," + num(l.mean_diff) + "\n";
    out += ch + ",loa_low,," + num(l.loa_low) + "\n";
    out += ch + ",loa_high,," + num(l.loa_high) + "\n";
    const auto s = stack(subjects, sys);
    for (std::size_t i = 0; i < s.ref.size(); ++i)
      out += ch + ",point," + num(0.5 * (s.ref[i] + s.est[i])) + "," + num(s.est[i] - s.ref[i]) +
             "\n";
  }
  return out;
}

std::string histogram_csv(const EvalReport &report) {
  std::string out = "channel,bin_low,bin_high,count\n";
  for (bool sys : {true, false}) {
    const auto &h = channel(report, sys).histogram;
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      out += std::string(sys ? "sbp" : "dbp") + "," + num(h.bin_low[i]) + "," +
             num(h.bin_low[i] + h.bin_width) + "," + std::to_string(h.counts[i]) + "\n";
  }
  return out;
}

std::string tracking_csv(const std::vector<TrackedSubject> &subjects) {
  std::string out = "subject_id,t,sbp_ref,sbp_est,dbp_ref,dbp_est\n";
  for (const auto &s : subjects) {
    const auto &p = s.predictions;
    for (std::size_t i = 0; i < p.sbp_ref.size(); ++i)
      out += p.subject_id + "," +
             fmt("%.3f", static_cast<double>(s.start_index + i) / s.sample_rate_hz) + "," +
             num(p.sbp_ref[i]) + "," + num(p.sbp_est[i]) + "," + num(p.dbp_ref[i]) + "," +
             num(p.dbp_est[i]) + "\n";
  }
  return out;
}

std::string tracking_svg(const std::vector<TrackedSubject> &subjects) {
  require(!subjects.empty(), "tracking plot needs a subject");
  const TrackedSubject &s = subjects.front();
  const auto &p = s.predictions;
  std::vector<double> t(p.sbp_ref.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<double>(s.start_index + i) / s.sample_rate_hz;
  std::vector<double> all;
  for (const auto *v : {&p.sbp_ref, &p.sbp_est, &p.dbp_ref, &p.dbp_est})
    all.insert(all.end(), v->begin(), v->end());

  Svg svg(900, 400);
  const Panel panel{70.0, 40.0, 780.0, 300.0, range_of(t), range_of(all)};
  axes(svg, panel, "Continuous tracking, subject " + p.subject_id, "time (s)", "pressure (mmHg)");
  const auto tt = thin(t);
  polyline(svg, panel, tt, thin(p.sbp_ref), "black");
  polyline(svg, panel, tt, thin(p.sbp_est), "crimson", "4 2");
  polyline(svg, panel, tt, thin(p.dbp_ref), "dimgray");
  polyline(svg, panel, tt, thin(p.dbp_est), "royalblue", "4 2");
  legend(svg, 720, 52,
         {{"SBP ref", "black"}, {"SBP est", "crimson"}, {"DBP ref", "dimgray"},
          {"DBP est", "royalblue"}});
  return svg.finish();
}

std::string histogram_svg(const EvalReport &report) {
  Svg svg(900, 400);
  for (int col = 0; col < 2; ++col) {
    const bool sys = col == 0;
    const auto &h = channel(report, sys).histogram;
    const double max_count =
        h.counts.empty() ? 1.0 : static_cast<double>(*std::max_element(h.counts.begin(), h.counts.end()));
    const double lo = h.bin_low.empty() ? -1.0 : h.bin_low.front();
    const double hi = h.bin_low.empty() ? 1.0 : h.bin_low.back() + h.bin_width;
    const Panel p = panel_at(col, {lo, hi}, {0.0, max_count * 1.05});
    axes(svg, p, std::string(name(sys)) + " error histogram", "error (mmHg)", "count");
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const double x0 = p.X(h.bin_low[i]), x1 = p.X(h.bin_low[i] + h.bin_width);
      const double y = p.Y(static_cast<double>(h.counts[i]));
      svg.raw("<rect x=\"" + c2(x0) + "\" y=\"" + c2(y) + "\" width=\"" + c2(x1 - x0) +
              "\" height=\"" + c2(p.y0 + p.h - y) +
              "\" fill=\"steelblue\" stroke=\"white\" stroke-width=\"0.5\"/>\n");
    }
  }
  return svg.finish();
}

std::string bland_altman_svg(const std::vector<TrackedSubject> &subjects,
                             const EvalReport &report) {
  Svg svg(900, 400);
  for (int col = 0; col < 2; ++col) {
    const bool sys = col == 0;
    const auto s = stack(subjects, sys);
    std::vector<double> means(s.ref.size()), diffs(s.ref.size());
    for (std::size_t i = 0; i < s.ref.size(); ++i) {
      means[i] = 0.5 * (s.ref[i] + s.est[i]);
      diffs[i] = s.est[i] - s.ref[i];
    }
    const auto &l = channel(report, sys).bland_altman;
    auto yvals = diffs;
    yvals.push_back(l.loa_low);
    yvals.push_back(l.loa_high);
    const Panel p = panel_at(col, range_of(means), range_of(yvals));
    axes(svg, p, std::string(name(sys)) + " Bland-Altman", "mean of ref and est (mmHg)",
         "est - ref (mmHg)");
    dots(svg, p, thin(means), thin(diffs), "steelblue");
    const std::vector<double> xs{p.xr.lo, p.xr.hi};
    polyline(svg, p, xs, {l.mean_diff, l.mean_diff}, "black");
    polyline(svg, p, xs, {l.loa_low, l.loa_low}, "crimson", "5 3");
    polyline(svg, p, xs, {l.loa_high, l.loa_high}, "crimson", "5 3");
    text(svg, p.x0 + p.w - 4, p.Y(l.loa_high) - 4, "+1.96 SD " + fmt("%.2f", l.loa_high), "end");
    text(svg, p.x0 + p.w - 4, p.Y(l.loa_low) + 12, "-1.96 SD " + fmt("%.2f", l.loa_low), "end");
  }
  return svg.finish();
}

std::string regression_svg(const std::vector<TrackedSubject> &subjects,
                           const EvalReport &report) {
  Svg svg(900, 400);
  for (int col = 0; col < 2; ++col) {
    const bool sys = col == 0;
    const auto s = stack(subjects, sys);
    auto both = s.ref;
    both.insert(both.end(), s.est.begin(), s.est.end());
    const Range r = range_of(both);
    const Panel p = panel_at(col, r, r);
    const auto &pr = channel(report, sys).pearson_r;
    axes(svg, p,
         std::string(name(sys)) + " regression, r = " + (pr ? fmt("%.4f", *pr) : std::string("n/a")),
         "reference (mmHg)", "estimate (mmHg)");
    dots(svg, p, thin(s.ref), thin(s.est), "steelblue");
    polyline(svg, p, {r.lo, r.hi}, {r.lo, r.hi}, "black", "4 2");
  }
  return svg.finish();
}

const std::vector<std::string> &report_files() {
  static const std::vector<std::string> files{
      "metrics.json",     "bhs.csv",          "bland_altman.csv",
      "histogram.csv",    "tracking.csv",     "tracking.svg",
      "histogram.svg",    "bland_altman.svg", "regression.svg"};
  return files;
}

EvalReport write_report(const std::filesystem::path &dir,
                        const std::vector<TrackedSubject> &subjects) {
  std::vector<metrics::SubjectPredictions> preds;
  for (const auto &s : subjects)
    preds.push_back(s.predictions);
  const EvalReport report = metrics::build_report(preds);

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    fail(ErrorKind::Io, "cannot create report directory '" + dir.string() + "'");
  data::write_file_atomic(dir / "metrics.json", metrics::report_to_json(report));
  data::write_file_atomic(dir / "bhs.csv", bhs_csv(report));
  data::write_file_atomic(dir / "bland_altman.csv", bland_altman_csv(subjects, report));
  data::write_file_atomic(dir / "histogram.csv", histogram_csv(report));
  data::write_file_atomic(dir / "tracking.csv", tracking_csv(subjects));
  data::write_file_atomic(dir / "tracking.svg", tracking_svg(subjects));
  data::write_file_atomic(dir / "histogram.svg", histogram_svg(report));
  data::write_file_atomic(dir / "bland_altman.svg", bland_altman_svg(subjects, report));
  data::write_file_atomic(dir / "regression.svg", regression_svg(subjects, report));
  return report;
}

} // namespace bpnet::report
