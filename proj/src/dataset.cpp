// SPDX-License-Identifier: Apache-2.0
#include <bpnet/dataset.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <bpnet/error.hpp>
#include <bpnet/model.hpp>

namespace bpnet::data {
namespace {

constexpr double kSampleStepS = 1.0 / kRecordRateHz;

std::vector<std::string> split_fields(const std::string &line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos)
      break;
    start = comma + 1;
  }
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' '))
    s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ')
    ++i;
  return s.substr(i);
}

bool parse_double(const std::string &text, double &out) {
  const char *first = text.data();
  const char *last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string read_text(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string format_number(double v, const char *spec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

} // namespace

void validate(const SubjectRecord &r) {
  const std::size_t n = r.abp.size();
  if (r.ecg.size() != n || r.ppg.size() != n)
    fail(ErrorKind::Data, "record '" + r.subject_id + "': ecg/ppg/abp lengths differ");
  for (const auto *s : {&r.ecg, &r.ppg, &r.abp}) {
    if (std::abs(s->sample_rate_hz - kRecordRateHz) > 1e-9)
      fail(ErrorKind::Data, "record '" + r.subject_id + "' is not sampled at 125 Hz");
    for (double v : s->samples)
      if (!std::isfinite(v))
        fail(ErrorKind::Data, "record '" + r.subject_id + "' holds a non-finite sample");
  }
}

std::vector<std::size_t> find_peaks(std::span<const double> x, const PeakOptions &options) {
  const std::size_t n = x.size();
  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n;) {
    if (x[i - 1] < x[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && x[ahead] == x[i])
        ++ahead;
      if (x[ahead] < x[i]) {
        candidates.push_back((i + ahead - 1) / 2);
        i = ahead;
        continue;
      }
    }
    ++i;
  }

  // Distance: keep taller peaks first, suppress neighbours closer than the limit.
  std::vector<std::size_t> kept;
  if (options.min_distance > 1 && !candidates.empty()) {
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x[candidates[a]] > x[candidates[b]];
    });
    std::vector<bool> keep(candidates.size(), true);
    for (std::size_t idx : order) {
      if (!keep[idx])
        continue;
      for (std::size_t j = idx; j-- > 0 && candidates[idx] - candidates[j] < options.min_distance;)
        keep[j] = false;
      for (std::size_t j = idx + 1;
           j < candidates.size() && candidates[j] - candidates[idx] < options.min_distance; ++j)
        keep[j] = false;
    }
    for (std::size_t k = 0; k < candidates.size(); ++k)
      if (keep[k])
        kept.push_back(candidates[k]);
  } else {
    kept = candidates;
  }

  // Prominence: height above the higher of the two bases, each base being the
  // minimum between the peak and the nearest higher sample on that side.
  std::vector<std::size_t> out;
  for (std::size_t p : kept) {
    const double h = x[p];
    double left_min = h;
    for (std::size_t i = p; i-- > 0;) {
      if (x[i] > h)
        break;
      left_min = std::min(left_min, x[i]);
    }
    double right_min = h;
    for (std::size_t i = p + 1; i < n; ++i) {
      if (x[i] > h)
        break;
      right_min = std::min(right_min, x[i]);
    }
    if (h - std::max(left_min, right_min) >= options.min_prominence)
      out.push_back(p);
  }
  return out;
}

BeatExtraction detect_beats(const SignalVector &abp) {
  signal::validate(abp);
  if (static_cast<double>(abp.size()) < kMinAbpDurationS * abp.sample_rate_hz)
    fail(ErrorKind::Data, "ABP shorter than " + format_number(kMinAbpDurationS, "%g") + " s");

  const PeakOptions options{
      static_cast<std::size_t>(std::ceil(kMinBeatSpacingS * abp.sample_rate_hz)),
      kMinPulseProminenceMmhg};
  BeatExtraction beats;
  for (std::size_t i : find_peaks(abp.samples, options))
    beats.systolic.push_back({i, abp.samples[i]});

  std::vector<double> inverted(abp.samples.size());
  std::transform(abp.samples.begin(), abp.samples.end(), inverted.begin(),
                 [](double v) { return -v; });
  for (std::size_t i : find_peaks(inverted, options))
    beats.diastolic.push_back({i, abp.samples[i]});
  return beats;
}

namespace {

std::vector<double> hold(const std::vector<Beat> &beats, std::size_t n) {
  std::vector<double> out(n);
  std::size_t next = 0;
  double current = beats.front().value;
  for (std::size_t t = 0; t < n; ++t) {
    while (next < beats.size() && beats[next].index <= t)
      current = beats[next++].value;
    out[t] = current;
  }
  return out;
}

} // namespace

TargetSeries extract_bp_targets(const SignalVector &abp) {
  const BeatExtraction beats = detect_beats(abp);
  if (beats.systolic.empty() || beats.diastolic.empty())
    fail(ErrorKind::Data, "no pulsatile ABP");

  TargetSeries targets{hold(beats.systolic, abp.size()), hold(beats.diastolic, abp.size())};
  for (std::size_t t = 0; t < targets.size(); ++t) {
    targets.dbp[t] = std::min(targets.dbp[t], targets.sbp[t]);
    if (targets.sbp[t] > kTargetCeilingMmhg || targets.dbp[t] < kTargetFloorMmhg)
      fail(ErrorKind::Data, "implausible blood pressure at sample " + std::to_string(t));
  }
  return targets;
}

Split split_record(std::size_t length, const SplitSpec &spec, std::size_t min_segment) {
  const double total = spec.train_fraction + spec.valid_fraction + spec.test_fraction;
  require(spec.train_fraction > 0 && spec.valid_fraction > 0 && spec.test_fraction > 0,
          "split fractions must be positive");
  require(std::abs(total - 1.0) < 1e-9, "split fractions must sum to 1");

  const auto n = static_cast<double>(length);
  const auto train = static_cast<std::size_t>(std::llround(n * spec.train_fraction));
  const auto valid = static_cast<std::size_t>(std::llround(n * spec.valid_fraction));
  if (train + valid >= length)
    fail(ErrorKind::Data, "record too short to split");
  Split split{{0, train}, {train, train + valid}, {train + valid, length}};
  for (const Segment *s : {&split.train, &split.valid, &split.test})
    if (s->size() < std::max<std::size_t>(min_segment, 1))
      fail(ErrorKind::Data, "record too short: " + std::to_string(length) +
                                " samples cannot hold a " + std::to_string(min_segment) +
                                "-sample window in every split");
  return split;
}

std::vector<WindowedExample> make_windows(const SubjectRecord &record,
                                          const TargetSeries &targets,
                                          const Segment &segment, std::size_t window_len,
                                          std::size_t stride) {
  require(window_len >= 1, "window length must be >= 1");
  require(stride >= 1, "stride must be >= 1");
  require(segment.end <= record.size() && targets.size() == record.size(),
          "segment exceeds record");

  std::vector<WindowedExample> out;
  if (segment.size() < window_len)
    return out;
  for (std::size_t start = segment.begin; start + window_len <= segment.end; start += stride) {
    const auto slice = [&](const std::vector<double> &v) {
      return std::span<const double>(v.data() + start, window_len);
    };
    WindowedExample w;
    w.subject_id = record.subject_id;
    w.start_index = start;
    w.ecg = signal::normalize_mu_law(slice(record.ecg.samples));
    w.ppg = signal::normalize_mu_law(slice(record.ppg.samples));
    w.sbp_target.resize(window_len);
    w.dbp_target.resize(window_len);
    for (std::size_t i = 0; i < window_len; ++i) {
      w.sbp_target[i] = model::normalize_sbp(targets.sbp[start + i]);
      w.dbp_target[i] = model::normalize_dbp(targets.dbp[start + i]);
    }
    out.push_back(std::move(w));
  }
  return out;
}

SubjectRecord parse_record(const std::string &text, const std::string &subject_id) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line))
    fail(ErrorKind::Data, subject_id + ": empty file");
  ++line_no;
  const auto header = split_fields(trim(line));
  const std::vector<std::string> expected{"t", "ecg", "ppg", "abp"};
  for (const auto &column : expected)
    if (std::find(header.begin(), header.end(), column) == header.end())
      fail(ErrorKind::Data, subject_id + ": missing column '" + column + "'");
  if (header != expected)
    fail(ErrorKind::Data, subject_id + ": header must be exactly 't,ecg,ppg,abp'");

  SubjectRecord r;
  r.subject_id = subject_id;
  for (auto *s : {&r.ecg, &r.ppg, &r.abp})
    s->sample_rate_hz = kRecordRateHz;

  double previous_t = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty())
      continue;
    const auto fields = split_fields(line);
    if (fields.size() != 4)
      fail(ErrorKind::Data, subject_id + ": line " + std::to_string(line_no) + " has " +
                                std::to_string(fields.size()) + " fields, expected 4");
    double v[4];
    for (int k = 0; k < 4; ++k) {
      if (!parse_double(trim(fields[k]), v[k]))
        fail(ErrorKind::Data, subject_id + ": line " + std::to_string(line_no) +
                                  ": cannot parse '" + fields[k] + "'");
      if (!std::isfinite(v[k]))
        fail(ErrorKind::Data, subject_id + ": line " + std::to_string(line_no) +
                                  ": non-finite value in column '" + expected[k] + "'");
    }
    if (!r.abp.samples.empty() && std::abs(v[0] - previous_t - kSampleStepS) > 1e-6)
      fail(ErrorKind::Data, subject_id + ": line " + std::to_string(line_no) +
                                ": time step is not 0.008 s");
    previous_t = v[0];
    r.ecg.samples.push_back(v[1]);
    r.ppg.samples.push_back(v[2]);
    r.abp.samples.push_back(v[3]);
  }
  if (r.abp.samples.empty())
    fail(ErrorKind::Data, subject_id + ": no samples");
  return r;
}

SubjectRecord load_record(const std::filesystem::path &path) {
  return parse_record(read_text(path), path.stem().string());
}

std::string format_record(const SubjectRecord &r) {
  validate(r);
  std::string out = "t,ecg,ppg,abp\n";
  out.reserve(r.size() * 40);
  for (std::size_t i = 0; i < r.size(); ++i) {
    out += format_number(static_cast<double>(i) * kSampleStepS, "%.3f");
    out += ',';
    out += format_number(r.ecg.samples[i], "%.9g");
    out += ',';
    out += format_number(r.ppg.samples[i], "%.9g");
    out += ',';
    out += format_number(r.abp.samples[i], "%.9g");
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::filesystem::path &path, const std::string &contents) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out)
      fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out << contents;
    if (!out)
      fail(ErrorKind::Io, "short write to '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    fail(ErrorKind::Io, "cannot write '" + path.string() + "': " + ec.message());
}

void save_record(const SubjectRecord &record, const std::filesystem::path &path) {
  write_file_atomic(path, format_record(record));
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path &path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != "subject_id,ecg_lead")
    fail(ErrorKind::Data, path.string() + ": header must be 'subject_id,ecg_lead'");
  std::vector<ManifestEntry> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty())
      continue;
    const auto fields = split_fields(line);
    if (fields.size() != 2 || fields[0].empty())
      fail(ErrorKind::Data, path.string() + ": line " + std::to_string(line_no) +
                                " must hold subject_id,ecg_lead");
    out.push_back({fields[0], fields[1]});
  }
  return out;
}

void save_manifest(const std::vector<ManifestEntry> &entries, const std::filesystem::path &path) {
  std::string out = "subject_id,ecg_lead\n";
  for (const auto &e : entries)
    out += e.subject_id + "," + e.ecg_lead + "\n";
  write_file_atomic(path, out);
}

std::vector<SubjectRecord> load_dataset(const std::filesystem::path &dir) {
  const auto manifest = dir / "manifest.csv";
  if (!std::filesystem::exists(manifest))
    fail(ErrorKind::Data, "no manifest.csv in '" + dir.string() + "'");
  std::vector<SubjectRecord> records;
  for (const auto &entry : load_manifest(manifest)) {
    auto record = load_record(dir / (entry.subject_id + ".csv"));
    record.ecg_lead = entry.ecg_lead;
    validate(record);
    records.push_back(std::move(record));
  }
  return records;
}

} // namespace bpnet::data
