#pragma once

#include <string>
#include <vector>

#include "hamur/config.hpp"
#include "hamur/metrics.hpp"
#include "hamur/trainer.hpp"

namespace hamur {

struct RunOutcome {
  TrainReport report;
  EvalResult test;
  std::uint64_t config_hash = 0;
  std::string run_dir;
};

// Full experiment: load, split, train, evaluate the test split, and write
// the run directory (resolved.ini, report.jsonl, checkpoint.bin,
// metrics.tsv). Everything needed to reproduce the run bit-identically is
// inside resolved.ini.
RunOutcome run_train(const ExperimentConfig& cfg, bool log_progress = false);

// Restores a checkpoint and evaluates one split: train, valid, or test.
EvalResult run_evaluate(const ExperimentConfig& cfg,
                        const std::string& checkpoint_path,
                        const std::string& split_name);

struct SweepRow {
  std::size_t value = 0;
  bool ok = false;
  std::string error;
  double auc = 0.0;
  bool has_auc = false;
  double logloss = 0.0;
};

// One full training run per value of the axis (rep_dim or hyper_hidden),
// sharing the seed and data split. Failures are recorded per row and the
// sweep continues. parallel runs each value in an isolated child process.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base,
                                const std::string& axis,
                                const std::vector<std::size_t>& values,
                                bool parallel, bool log_progress = false);

struct CompareOutcome {
  EvalResult baseline;  // adapters disabled
  EvalResult with_adapters;
};

// Ablation protocol: trains the plain per-domain backbone and the
// adapter-augmented model with identical seed and split.
CompareOutcome run_compare(const ExperimentConfig& cfg,
                           bool log_progress = false);

// Tab-separated tables, fixed 6-decimal formatting, '-' for undefined AUC.
std::string metrics_tsv(const EvalResult& r);
std::string sweep_tsv(const std::string& axis,
                      const std::vector<SweepRow>& rows);
std::string compare_tsv(const CompareOutcome& r);
std::string report_jsonl(const TrainReport& report);

}  // namespace hamur
