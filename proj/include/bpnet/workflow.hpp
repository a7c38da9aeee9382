// SPDX-License-Identifier: Apache-2.0
/**
 * @file   workflow.hpp
 * @brief  Directory-level commands: synthesize, preprocess, train, evaluate.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <bpnet/metrics.hpp>
#include <bpnet/model.hpp>
#include <bpnet/train.hpp>

namespace bpnet::workflow {

namespace fs = std::filesystem;

using LogSink = std::function<void(const std::string &)>;

struct SynthDatasetOptions {
  std::size_t subjects = 8;
  std::uint64_t seed = 0;
  double duration_s = 120.0;
};

/// Writes `<id>.csv` per subject, `manifest.csv` and `truth/<id>.csv`
/// (per-beat generator values).
void synth_dataset(const fs::path &out_dir, const SynthDatasetOptions &options);

/// Subject ids used by synth_dataset: S001, S002, ...
std::string synth_subject_id(std::size_t index);

struct FileFailure {
  std::string file;
  std::string message;
};

struct PreprocessSummary {
  std::size_t files_seen = 0;
  std::size_t files_written = 0;
  std::vector<FileFailure> failures;
  std::vector<std::string> warnings;
};

/// Denoises ECG and PPG of every record CSV in `in_dir` (ABP is copied) and
/// writes `preprocess.log` with the idempotence delta per signal: the RMS
/// change a second pass would make, relative to the RMS of the output.
PreprocessSummary preprocess_dataset(const fs::path &in_dir, const fs::path &out_dir,
                                     const LogSink &log = {});

struct DataConfig {
  std::size_t window_len = data::kDefaultWindowLen;
  std::size_t stride = data::kDefaultStride;

  bool operator==(const DataConfig &) const = default;
};

struct RunConfig {
  model::ModelConfig model;
  train::TrainConfig train;
  DataConfig data;
};

/// Requires "model" and "train" objects with every field; "data" is optional.
RunConfig parse_run_config(const std::string &text);
RunConfig load_run_config(const fs::path &path);
std::string run_config_to_json(const RunConfig &config);

struct SubjectWindows {
  data::SubjectRecord record;
  data::TargetSeries targets;
  data::Split split;
};

/// Loads a dataset directory, extracts targets and splits every subject.
std::vector<SubjectWindows> prepare_subjects(const fs::path &data_dir, std::size_t window_len);

struct TrainRunOptions {
  bool resume = false;
  bool per_subject = false;
};

struct TrainSummary {
  std::size_t epochs_completed = 0;
  double final_valid_loss = 0.0;
  std::size_t train_windows = 0, valid_windows = 0;
};

/// Trains one global model (or one per subject, with `out` as a directory)
/// and writes the checkpoint, `<stem>.best.json` and history.csv beside it.
TrainSummary train_dataset(const fs::path &data_dir, const RunConfig &config, const fs::path &out,
                           const TrainRunOptions &options = {}, const LogSink &log = {});

/// Predicts every subject's test segment and writes the report directory.
/// `ckpt` is a checkpoint file or a per-subject checkpoint directory.
metrics::EvalReport eval_dataset(const fs::path &ckpt, const fs::path &data_dir,
                                 const fs::path &report_dir, const LogSink &log = {});

} // namespace bpnet::workflow
