// SPDX-License-Identifier: Apache-2.0
// bpnet: synthesize, preprocess, train and evaluate from the command line.
// Exit codes: 0 success, 1 usage, 2 data or i/o error, 3 numeric failure.
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <bpnet/bpnet.h>

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

int exit_code(bpnet_status status) {
  switch (status) {
  case BPNET_OK:
    return kOk;
  case BPNET_ERR_INVALID_ARGUMENT:
    return kUsage;
  case BPNET_ERR_NUMERIC:
    return kNumeric;
  default:
    return kData;
  }
}

int report(bpnet_status status, const char *command) {
  if (status != BPNET_OK)
    std::fprintf(stderr, "bpnet %s: %s: %s\n", command, bpnet_status_string(status),
                 bpnet_last_error());
  return exit_code(status);
}

struct LogState {
  std::vector<std::string> errors;
};

void print_log(bpnet_log_level level, const char *message, void *user) {
  auto *state = static_cast<LogState *>(user);
  switch (level) {
  case BPNET_LOG_INFO:
    std::fprintf(stderr, "%s\n", message);
    break;
  case BPNET_LOG_WARNING:
    std::fprintf(stderr, "warning: %s\n", message);
    break;
  case BPNET_LOG_ERROR:
    std::fprintf(stderr, "error: %s\n", message);
    if (state)
      state->errors.emplace_back(message);
    break;
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Cuff-less blood pressure estimation from ECG and PPG"};
  app.set_version_flag("--version", bpnet_version());
  app.require_subcommand(1);

  std::size_t subjects = 0;
  std::uint64_t seed = 0;
  double duration = 120.0;
  std::string synth_out;
  auto *synth = app.add_subcommand("synth", "Generate synthetic ECG/PPG/ABP subjects");
  synth->add_option("--subjects", subjects, "Number of subjects (>= 1)")->required();
  synth->add_option("--seed", seed, "Random seed")->required();
  synth->add_option("--duration", duration, "Record length in seconds (>= 30)")
      ->capture_default_str();
  synth->add_option("--out", synth_out, "Output dataset directory")->required();

  std::string pre_in, pre_out;
  auto *pre = app.add_subcommand("preprocess", "Denoise ECG and PPG of every record");
  pre->add_option("--in", pre_in, "Input dataset directory")->required();
  pre->add_option("--out", pre_out, "Output dataset directory")->required();

  std::string train_data, train_config, train_out;
  bool resume = false, per_subject = false;
  auto *train = app.add_subcommand("train", "Train a model on a dataset directory");
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--config", train_config, "JSON config with model and train sections")
      ->required();
  train->add_option("--out", train_out,
                    "Checkpoint path (a directory of checkpoints with --per-subject)")
      ->required();
  train->add_flag("--resume", resume, "Continue from the checkpoint at --out");
  train->add_flag("--per-subject", per_subject, "Train one model per subject");

  std::string eval_ckpt, eval_data, eval_report;
  auto *eval = app.add_subcommand("eval", "Evaluate test segments and write a report");
  eval->add_option("--ckpt", eval_ckpt, "Checkpoint file or per-subject checkpoint directory")
      ->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--report", eval_report, "Report output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*synth) {
    const auto status = bpnet_synth_dataset(synth_out.c_str(), subjects, seed, duration);
    if (status == BPNET_OK)
      std::printf("wrote %zu subjects to %s\n", subjects, synth_out.c_str());
    return report(status, "synth");
  }

  if (*pre) {
    LogState state;
    bpnet_preprocess_summary summary{};
    const auto status =
        bpnet_preprocess_dir(pre_in.c_str(), pre_out.c_str(), print_log, &state, &summary);
    if (status != BPNET_OK)
      return report(status, "preprocess");
    std::printf("preprocessed %zu of %zu files\n", summary.files_written, summary.files_seen);
    if (!state.errors.empty()) {
      std::fprintf(stderr, "%zu file(s) failed:\n", state.errors.size());
      for (const auto &e : state.errors)
        std::fprintf(stderr, "  %s\n", e.c_str());
      return kData;
    }
    return kOk;
  }

  if (*train) {
    double valid_loss = 0.0;
    const auto status =
        bpnet_train_dir(train_data.c_str(), train_config.c_str(), train_out.c_str(), resume,
                        per_subject, print_log, nullptr, &valid_loss);
    if (status == BPNET_OK)
      std::printf("final valid loss %.6g\n", valid_loss);
    return report(status, "train");
  }

  if (*eval) {
    const auto status = bpnet_eval_dir(eval_ckpt.c_str(), eval_data.c_str(), eval_report.c_str(),
                                       print_log, nullptr);
    if (status == BPNET_OK)
      std::printf("report written to %s\n", eval_report.c_str());
    return report(status, "eval");
  }
  return kUsage;
}
