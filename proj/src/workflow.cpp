// SPDX-License-Identifier: Apache-2.0
#include <bpnet/workflow.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <bpnet/error.hpp>
#include <bpnet/json_io.hpp>
#include <bpnet/report.hpp>
#include <bpnet/synth.hpp>

namespace bpnet::workflow {
namespace {

using json_io::field;
using json_io::json;

void emit(const LogSink &log, const std::string &line) {
  if (log)
    log(line);
}

std::string fmt(const char *spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void make_dirs(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    fail(ErrorKind::Io, "cannot create directory '" + dir.string() + "'");
}

std::string read_text(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

[[noreturn]] void rethrow_for(const std::string &subject, const Error &e) {
  fail(e.kind(), "subject '" + subject + "': " + e.what());
}

std::uint64_t subject_seed(std::uint64_t seed, std::size_t index) {
  std::uint64_t x = seed * 0x9e3779b97f4a7c15ULL + index + 1;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double rms(const std::vector<double> &x) {
  double s = 0.0;
  for (double v : x)
    s += v * v;
  return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

double relative_delta(const std::vector<double> &a, const std::vector<double> &b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    d[i] = b[i] - a[i];
  const double base = rms(a);
  return base > 0.0 ? rms(d) / base : rms(d);
}

} // namespace

std::string synth_subject_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "S%03zu", index + 1);
  return buf;
}

void synth_dataset(const fs::path &out_dir, const SynthDatasetOptions &options) {
  require(options.subjects >= 1, "--subjects must be >= 1");
  require(options.duration_s >= data::kSynthMinDurationS, "--duration must be >= 30 s");
  make_dirs(out_dir);
  make_dirs(out_dir / "truth");

  std::vector<data::ManifestEntry> manifest;
  for (std::size_t k = 0; k < options.subjects; ++k) {
    const std::string id = synth_subject_id(k);
    const std::uint64_t seed = subject_seed(options.seed, k);
    data::SynthOptions so;
    so.seed = seed;
    so.duration_s = options.duration_s;
    so.heart_rate_hz = 1.0 + 0.5 * nn::unit_uniform(subject_seed(seed, 0));
    const auto subject = data::synth_subject(id, so);
    data::save_record(subject.record, out_dir / (id + ".csv"));
    data::write_file_atomic(out_dir / "truth" / (id + ".csv"),
                            data::format_ground_truth(subject.beats));
    manifest.push_back({id, subject.record.ecg_lead});
  }
  data::save_manifest(manifest, out_dir / "manifest.csv");
}

PreprocessSummary preprocess_dataset(const fs::path &in_dir, const fs::path &out_dir,
                                     const LogSink &log) {
  if (!fs::is_directory(in_dir))
    fail(ErrorKind::Io, "input directory '" + in_dir.string() + "' does not exist");

  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(in_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv" &&
        entry.path().filename() != "manifest.csv")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  PreprocessSummary summary;
  summary.files_seen = files.size();
  if (files.empty()) {
    summary.warnings.push_back("no record files in '" + in_dir.string() + "'");
    return summary;
  }
  make_dirs(out_dir);

  std::vector<data::ManifestEntry> leads;
  const bool has_manifest = fs::exists(in_dir / "manifest.csv");
  if (has_manifest) {
    try {
      leads = data::load_manifest(in_dir / "manifest.csv");
    } catch (const Error &e) {
      summary.failures.push_back({"manifest.csv", e.what()});
    }
  } else {
    summary.warnings.push_back("no manifest.csv; ECG leads recorded as 'unknown'");
  }

  std::string report = "subject_id,ecg_idempotence_delta,ppg_idempotence_delta\n";
  std::vector<data::ManifestEntry> written;
  for (const auto &path : files) {
    const std::string name = path.filename().string();
    try {
      data::SubjectRecord rec = data::load_record(path);
      data::validate(rec);
      rec.ecg = signal::denoise_ecg(rec.ecg);
      rec.ppg = signal::denoise_ppg(rec.ppg);
      const double ecg_delta = relative_delta(rec.ecg.samples, signal::denoise_ecg(rec.ecg).samples);
      const double ppg_delta = relative_delta(rec.ppg.samples, signal::denoise_ppg(rec.ppg).samples);
      data::save_record(rec, out_dir / name);
      ++summary.files_written;

      std::string lead = "unknown";
      for (const auto &e : leads)
        if (e.subject_id == rec.subject_id)
          lead = e.ecg_lead;
      written.push_back({rec.subject_id, lead});
      report += rec.subject_id + "," + fmt("%.6e", ecg_delta) + "," + fmt("%.6e", ppg_delta) + "\n";
      emit(log, name + ": idempotence delta ecg " + fmt("%.3e", ecg_delta) + ", ppg " +
                    fmt("%.3e", ppg_delta));
    } catch (const Error &e) {
      summary.failures.push_back({name, e.what()});
    }
  }
  data::save_manifest(written, out_dir / "manifest.csv");
  data::write_file_atomic(out_dir / "preprocess.log", report);
  return summary;
}

RunConfig parse_run_config(const std::string &text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    fail(ErrorKind::Data, std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object())
    fail(ErrorKind::Data, "config must be a JSON object");
  if (!doc.contains("model"))
    fail(ErrorKind::Data, "missing config field 'model'");
  if (!doc.contains("train"))
    fail(ErrorKind::Data, "missing config field 'train'");

  RunConfig c;
  c.model = json_io::model_config_from_json(doc["model"], "model");
  const json &t = doc["train"];
  c.train.base_lr = field<double>(t, "base_lr", "train");
  c.train.cycle_len_epochs = field<std::size_t>(t, "cycle_len_epochs", "train");
  c.train.halving_period_epochs = field<std::size_t>(t, "halving_period_epochs", "train");
  c.train.cycle_boundary_multiplier = field<double>(t, "cycle_boundary_multiplier", "train");
  c.train.batch_size = field<std::size_t>(t, "batch_size", "train");
  c.train.epochs = field<std::size_t>(t, "epochs", "train");
  c.train.loss = field<std::string>(t, "loss", "train");
  c.train.rng_seed = field<std::uint64_t>(t, "rng_seed", "train");
  try {
    train::validate(c.train);
  } catch (const Error &e) {
    fail(ErrorKind::Data, std::string("invalid train config: ") + e.what());
  }
  if (doc.contains("data")) {
    c.data.window_len = field<std::size_t>(doc["data"], "window_len", "data");
    c.data.stride = field<std::size_t>(doc["data"], "stride", "data");
    if (c.data.window_len < 1 || c.data.stride < 1)
      fail(ErrorKind::Data, "invalid data config: window_len and stride must be >= 1");
  }
  return c;
}

RunConfig load_run_config(const fs::path &path) { return parse_run_config(read_text(path)); }

std::string run_config_to_json(const RunConfig &c) {
  const json doc{{"model", json_io::to_json(c.model)},
                 {"train",
                  {{"base_lr", c.train.base_lr},
                   {"cycle_len_epochs", c.train.cycle_len_epochs},
                   {"halving_period_epochs", c.train.halving_period_epochs},
                   {"cycle_boundary_multiplier", c.train.cycle_boundary_multiplier},
                   {"batch_size", c.train.batch_size},
                   {"epochs", c.train.epochs},
                   {"loss", c.train.loss},
                   {"rng_seed", c.train.rng_seed}}},
                 {"data", {{"window_len", c.data.window_len}, {"stride", c.data.stride}}}};
  return doc.dump(2) + "\n";
}

std::vector<SubjectWindows> prepare_subjects(const fs::path &data_dir, std::size_t window_len) {
  std::vector<SubjectWindows> out;
  for (auto &record : data::load_dataset(data_dir)) {
    try {
      SubjectWindows s;
      s.targets = data::extract_bp_targets(record.abp);
      s.split = data::split_record(record.size(), {}, window_len);
      s.record = std::move(record);
      out.push_back(std::move(s));
    } catch (const Error &e) {
      rethrow_for(record.subject_id, e);
    }
  }
  return out;
}

namespace {

struct TrainPaths {
  fs::path checkpoint, best, history;
};

TrainSummary train_one(const std::vector<const SubjectWindows *> &subjects, const RunConfig &cfg,
                       const TrainPaths &paths, bool resume, const LogSink &log) {
  std::vector<data::WindowedExample> train_w, valid_w;
  for (const SubjectWindows *s : subjects) {
    auto tw = data::make_windows(s->record, s->targets, s->split.train, cfg.data.window_len,
                                 cfg.data.stride);
    auto vw = data::make_windows(s->record, s->targets, s->split.valid, cfg.data.window_len,
                                 cfg.data.stride);
    train_w.insert(train_w.end(), std::make_move_iterator(tw.begin()),
                   std::make_move_iterator(tw.end()));
    valid_w.insert(valid_w.end(), std::make_move_iterator(vw.begin()),
                   std::make_move_iterator(vw.end()));
  }
  if (train_w.empty())
    fail(ErrorKind::Data, "empty dataset: no training windows");

  model::BPNetModel net;
  std::size_t completed = 0;
  std::string history_prefix;
  if (resume) {
    if (!fs::exists(paths.checkpoint))
      fail(ErrorKind::Data, "resume: no checkpoint at '" + paths.checkpoint.string() + "'");
    model::CheckpointMeta meta;
    net = model::load_checkpoint(paths.checkpoint, &meta);
    if (!(net.config() == cfg.model))
      fail(ErrorKind::Data, "resume: checkpoint model config does not match the config file");
    completed = meta.epochs_completed;
    if (fs::exists(paths.history)) {
      history_prefix = read_text(paths.history);
      const auto eol = history_prefix.find('\n');
      history_prefix = eol == std::string::npos ? "" : history_prefix.substr(eol + 1);
    }
  } else {
    net = model::build_bpnet(cfg.model, cfg.train.rng_seed);
  }

  train::TrainConfig tc = cfg.train;
  tc.epochs = cfg.train.epochs > completed ? cfg.train.epochs - completed : 0;
  train::TrainOptions options;
  options.start_epoch = completed;
  options.on_epoch = [&](const train::EpochRecord &r) {
    char line[160];
    std::snprintf(line, sizeof line, "epoch %zu lr %.6g train_loss %.6g valid_loss %.6g", r.epoch,
                  r.lr, r.train_loss, r.valid_loss);
    emit(log, line);
  };
  const auto result = train::train(net, train_w, valid_w, tc, options);

  const model::CheckpointMeta meta{completed + tc.epochs, cfg.data.window_len,
                                   data::kRecordRateHz};
  model::save_checkpoint(net, paths.checkpoint, meta);
  if (result.best_model) {
    model::CheckpointMeta best_meta = meta;
    best_meta.epochs_completed = result.best_epoch + 1;
    model::save_checkpoint(*result.best_model, paths.best, best_meta);
  }
  const std::string history = train::format_history(result.history);
  data::write_file_atomic(paths.history,
                          history.substr(0, history.find('\n') + 1) + history_prefix +
                              history.substr(history.find('\n') + 1));

  TrainSummary summary;
  summary.epochs_completed = meta.epochs_completed;
  summary.train_windows = train_w.size();
  summary.valid_windows = valid_w.size();
  summary.final_valid_loss = result.history.epochs.empty()
                                 ? train::evaluate_loss(net, valid_w, tc.batch_size)
                                 : result.history.epochs.back().valid_loss;
  return summary;
}

fs::path with_suffix(const fs::path &path, const std::string &suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

} // namespace

TrainSummary train_dataset(const fs::path &data_dir, const RunConfig &cfg, const fs::path &out,
                           const TrainRunOptions &options, const LogSink &log) {
  model::validate(cfg.model);
  train::validate(cfg.train);
  const std::size_t field = model::receptive_field_total(cfg.model);
  if (cfg.data.window_len < field)
    emit(log, "warning: window_len " + std::to_string(cfg.data.window_len) +
                  " is shorter than the receptive field " + std::to_string(field));

  const auto subjects = prepare_subjects(data_dir, cfg.data.window_len);
  if (subjects.empty())
    fail(ErrorKind::Data, "empty dataset: '" + data_dir.string() + "' lists no subjects");

  if (!options.per_subject) {
    std::vector<const SubjectWindows *> all;
    for (const auto &s : subjects)
      all.push_back(&s);
    if (!out.parent_path().empty())
      make_dirs(out.parent_path());
    const TrainPaths paths{out, with_suffix(out, ".best.json"),
                           out.parent_path() / "history.csv"};
    return train_one(all, cfg, paths, options.resume, log);
  }

  make_dirs(out);
  TrainSummary total;
  double loss_sum = 0.0;
  for (const auto &s : subjects) {
    const std::string id = s.record.subject_id;
    emit(log, "subject " + id);
    const TrainPaths paths{out / (id + ".json"), out / (id + ".best.json"),
                           out / (id + ".history.csv")};
    const auto one = train_one({&s}, cfg, paths, options.resume, log);
    total.epochs_completed = one.epochs_completed;
    total.train_windows += one.train_windows;
    total.valid_windows += one.valid_windows;
    loss_sum += one.final_valid_loss;
  }
  total.final_valid_loss = loss_sum / static_cast<double>(subjects.size());
  return total;
}

metrics::EvalReport eval_dataset(const fs::path &ckpt, const fs::path &data_dir,
                                 const fs::path &report_dir, const LogSink &log) {
  if (!fs::exists(ckpt))
    fail(ErrorKind::Io, "checkpoint '" + ckpt.string() + "' does not exist");
  const bool per_subject = fs::is_directory(ckpt);

  model::BPNetModel global;
  model::CheckpointMeta global_meta;
  if (!per_subject)
    global = model::load_checkpoint(ckpt, &global_meta);

  const auto subjects = prepare_subjects(data_dir, 1);
  if (subjects.empty())
    fail(ErrorKind::Data, "empty dataset: '" + data_dir.string() + "' lists no subjects");

  std::vector<report::TrackedSubject> tracked;
  for (const auto &s : subjects) {
    const std::string id = s.record.subject_id;
    model::BPNetModel local;
    model::CheckpointMeta meta = global_meta;
    if (per_subject) {
      const auto path = ckpt / (id + ".json");
      if (!fs::exists(path))
        fail(ErrorKind::Data, "checkpoint/data mismatch: no checkpoint for subject '" + id + "'");
      local = model::load_checkpoint(path, &meta);
    }
    const model::BPNetModel &net = per_subject ? local : global;
    if (std::abs(meta.sample_rate_hz - s.record.ecg.sample_rate_hz) > 1e-9)
      fail(ErrorKind::Data, "checkpoint/data mismatch: checkpoint expects " +
                                fmt("%g", meta.sample_rate_hz) + " Hz, data is " +
                                fmt("%g", s.record.ecg.sample_rate_hz) + " Hz");
    const std::size_t window = meta.window_len > 0 ? meta.window_len : data::kDefaultWindowLen;

    const auto pred = train::predict(net, s.record, s.split.test, window);
    report::TrackedSubject t;
    t.start_index = s.split.test.begin;
    t.sample_rate_hz = s.record.ecg.sample_rate_hz;
    t.predictions.subject_id = id;
    const auto slice = [&](const std::vector<double> &v) {
      return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(s.split.test.begin),
                                 v.begin() + static_cast<std::ptrdiff_t>(s.split.test.end));
    };
    t.predictions.sbp_ref = slice(s.targets.sbp);
    t.predictions.dbp_ref = slice(s.targets.dbp);
    t.predictions.sbp_est = pred.sbp;
    t.predictions.dbp_est = pred.dbp;
    emit(log, id + ": " + std::to_string(pred.sbp.size()) + " test samples");
    tracked.push_back(std::move(t));
  }
  return report::write_report(report_dir, tracked);
}

} // namespace bpnet::workflow
