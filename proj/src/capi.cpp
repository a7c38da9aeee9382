// SPDX-License-Identifier: Apache-2.0
#include <bpnet/bpnet.h>

#include <algorithm>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include <bpnet/error.hpp>
#include <bpnet/json_io.hpp>
#include <bpnet/model.hpp>
#include <bpnet/signal.hpp>
#include <bpnet/train.hpp>
#include <bpnet/workflow.hpp>

struct bpnet_model {
  bpnet::model::BPNetModel net;
  bpnet::model::CheckpointMeta meta;
};

namespace {

thread_local std::string g_last_error;

bpnet_status set_error(bpnet_status status, const std::string &message) {
  g_last_error = message;
  return status;
}

bpnet_status status_of(bpnet::ErrorKind kind) {
  switch (kind) {
  case bpnet::ErrorKind::InvalidArgument:
    return BPNET_ERR_INVALID_ARGUMENT;
  case bpnet::ErrorKind::Data:
    return BPNET_ERR_DATA;
  case bpnet::ErrorKind::Numeric:
    return BPNET_ERR_NUMERIC;
  case bpnet::ErrorKind::Io:
    return BPNET_ERR_IO;
  }
  return BPNET_ERR_INTERNAL;
}

template <typename F> bpnet_status guarded(F &&body) {
  g_last_error.clear();
  try {
    body();
    return BPNET_OK;
  } catch (const bpnet::Error &e) {
    return set_error(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc &) {
    return set_error(BPNET_ERR_INTERNAL, "out of memory");
  } catch (const std::exception &e) {
    return set_error(BPNET_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(BPNET_ERR_INTERNAL, "unknown failure");
  }
}

void need(const void *p, const char *name) {
  if (!p)
    bpnet::fail(bpnet::ErrorKind::InvalidArgument, std::string(name) + " must not be NULL");
}

bpnet::workflow::LogSink sink(bpnet_log_fn log, void *user) {
  if (!log)
    return {};
  return [log, user](const std::string &line) { log(BPNET_LOG_INFO, line.c_str(), user); };
}

} // namespace

extern "C" {

const char *bpnet_version(void) { return "1.0.0"; }

const char *bpnet_last_error(void) { return g_last_error.c_str(); }

const char *bpnet_status_string(bpnet_status status) {
  switch (status) {
  case BPNET_OK:
    return "ok";
  case BPNET_ERR_INVALID_ARGUMENT:
    return "invalid argument";
  case BPNET_ERR_DATA:
    return "data error";
  case BPNET_ERR_NUMERIC:
    return "numeric failure";
  case BPNET_ERR_IO:
    return "i/o error";
  case BPNET_ERR_INTERNAL:
    return "internal error";
  }
  return "unknown status";
}

bpnet_status bpnet_mu_law(const double *in, size_t n, double mu, double *out) {
  return guarded([&] {
    if (n == 0)
      return;
    need(in, "in");
    need(out, "out");
    for (size_t i = 0; i < n; ++i)
      out[i] = bpnet::signal::mu_law(in[i], mu);
  });
}

bpnet_status bpnet_mu_law_inverse(const double *in, size_t n, double mu, double *out) {
  return guarded([&] {
    if (n == 0)
      return;
    need(in, "in");
    need(out, "out");
    for (size_t i = 0; i < n; ++i)
      out[i] = bpnet::signal::mu_law_inverse(in[i], mu);
  });
}

bpnet_status bpnet_denoise(bpnet_signal_kind kind, const double *in, size_t n,
                           double sample_rate_hz, double *out) {
  return guarded([&] {
    need(in, "in");
    need(out, "out");
    bpnet::require(kind == BPNET_SIGNAL_ECG || kind == BPNET_SIGNAL_PPG, "unknown signal kind");
    bpnet::signal::SignalVector s{sample_rate_hz, std::vector<double>(in, in + n)};
    const auto y = kind == BPNET_SIGNAL_PPG ? bpnet::signal::denoise_ppg(s)
                                            : bpnet::signal::denoise_ecg(s);
    if (y.size() != n)
      bpnet::fail(bpnet::ErrorKind::Numeric, "denoised length differs from input");
    std::copy(y.samples.begin(), y.samples.end(), out);
  });
}

bpnet_status bpnet_model_create(const char *model_config_json, uint64_t seed, bpnet_model **out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    bpnet::model::ModelConfig config;
    if (model_config_json) {
      bpnet::json_io::json j;
      try {
        j = bpnet::json_io::json::parse(model_config_json);
      } catch (const bpnet::json_io::json::parse_error &e) {
        bpnet::fail(bpnet::ErrorKind::Data, std::string("config parse error: ") + e.what());
      }
      config = bpnet::json_io::model_config_from_json(j, "model");
    }
    *out = new bpnet_model{bpnet::model::build_bpnet(config, seed), {}};
  });
}

bpnet_status bpnet_model_load(const char *path, bpnet_model **out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<bpnet_model>();
    handle->net = bpnet::model::load_checkpoint(path, &handle->meta);
    *out = handle.release();
  });
}

bpnet_status bpnet_model_save(const bpnet_model *model, const char *path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    bpnet::model::save_checkpoint(model->net, path, model->meta);
  });
}

void bpnet_model_free(bpnet_model *model) { delete model; }

bpnet_status bpnet_model_receptive_field(const bpnet_model *model, size_t *out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = bpnet::model::receptive_field_total(model->net.config());
  });
}

bpnet_status bpnet_model_parameter_count(const bpnet_model *model, size_t *out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = model->net.parameter_count();
  });
}

bpnet_status bpnet_model_forward(const bpnet_model *model, const double *ecg, const double *ppg,
                                 size_t batch, size_t length, double *out) {
  return guarded([&] {
    need(model, "model");
    need(ecg, "ecg");
    need(ppg, "ppg");
    need(out, "out");
    bpnet::require(batch >= 1 && length >= 1, "batch and length must be >= 1");
    const size_t n = batch * length;
    bpnet::nn::Tensor e({batch, 1, length}, std::vector<double>(ecg, ecg + n));
    bpnet::nn::Tensor p({batch, 1, length}, std::vector<double>(ppg, ppg + n));
    const auto y = model->net.infer(e, p);
    std::copy(y.values().begin(), y.values().end(), out);
  });
}

bpnet_status bpnet_model_predict(const bpnet_model *model, const double *ecg, const double *ppg,
                                 size_t length, size_t window_len, double *sbp, double *dbp) {
  return guarded([&] {
    need(model, "model");
    need(ecg, "ecg");
    need(ppg, "ppg");
    need(sbp, "sbp");
    need(dbp, "dbp");
    bpnet::require(length >= 1, "length must be >= 1");
    bpnet::data::SubjectRecord rec;
    rec.subject_id = "input";
    rec.ecg = {bpnet::data::kRecordRateHz, std::vector<double>(ecg, ecg + length)};
    rec.ppg = {bpnet::data::kRecordRateHz, std::vector<double>(ppg, ppg + length)};
    rec.abp = {bpnet::data::kRecordRateHz, std::vector<double>(length, 0.0)};
    bpnet::data::validate(rec);
    const size_t window = window_len ? window_len
                          : model->meta.window_len ? model->meta.window_len
                                                   : bpnet::data::kDefaultWindowLen;
    const auto pred = bpnet::train::predict(model->net, rec, {0, length}, window);
    std::copy(pred.sbp.begin(), pred.sbp.end(), sbp);
    std::copy(pred.dbp.begin(), pred.dbp.end(), dbp);
  });
}

bpnet_status bpnet_synth_dataset(const char *out_dir, size_t subjects, uint64_t seed,
                                 double duration_s) {
  return guarded([&] {
    need(out_dir, "out_dir");
    bpnet::workflow::synth_dataset(out_dir, {subjects, seed, duration_s});
  });
}

bpnet_status bpnet_preprocess_dir(const char *in_dir, const char *out_dir, bpnet_log_fn log,
                                  void *user_data, bpnet_preprocess_summary *summary) {
  return guarded([&] {
    need(in_dir, "in_dir");
    need(out_dir, "out_dir");
    const auto s = bpnet::workflow::preprocess_dataset(in_dir, out_dir, sink(log, user_data));
    if (log) {
      for (const auto &w : s.warnings)
        log(BPNET_LOG_WARNING, w.c_str(), user_data);
      for (const auto &f : s.failures)
        log(BPNET_LOG_ERROR, (f.file + ": " + f.message).c_str(), user_data);
    }
    if (summary)
      *summary = {s.files_seen, s.files_written, s.failures.size()};
  });
}

bpnet_status bpnet_train_dir(const char *data_dir, const char *config_path, const char *out,
                             int resume, int per_subject, bpnet_log_fn log, void *user_data,
                             double *final_valid_loss) {
  return guarded([&] {
    need(data_dir, "data_dir");
    need(config_path, "config_path");
    need(out, "out");
    const auto config = bpnet::workflow::load_run_config(config_path);
    const auto s = bpnet::workflow::train_dataset(data_dir, config, out,
                                                  {resume != 0, per_subject != 0},
                                                  sink(log, user_data));
    if (final_valid_loss)
      *final_valid_loss = s.final_valid_loss;
  });
}

bpnet_status bpnet_eval_dir(const char *checkpoint, const char *data_dir, const char *report_dir,
                            bpnet_log_fn log, void *user_data) {
  return guarded([&] {
    need(checkpoint, "checkpoint");
    need(data_dir, "data_dir");
    need(report_dir, "report_dir");
    bpnet::workflow::eval_dataset(checkpoint, data_dir, report_dir, sink(log, user_data));
  });
}

} // extern "C"
