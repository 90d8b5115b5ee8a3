#include "hamur/runner.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hamur/checkpoint.hpp"
#include "hamur/errors.hpp"

namespace hamur {

namespace {

using nlohmann::json;

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

json row_json(const MetricRow& r) {
  json j;
  j["auc"] = r.has_auc ? json(r.auc) : json(nullptr);
  j["logloss"] = r.logloss;
  j["n"] = r.n;
  return j;
}

json eval_json(const EvalResult& r) {
  json j;
  j["domains"] = json::array();
  for (std::size_t d = 0; d < r.domain.size(); ++d) {
    json row = row_json(r.domain[d]);
    row["domain"] = d + 1;
    j["domains"].push_back(row);
  }
  j["total"] = row_json(r.total);
  return j;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot write " + path);
  out << content;
  if (!out) throw data_error("write failed for " + path);
}

SplitResult load_and_split(const ExperimentConfig& cfg) {
  Dataset ds = load_csv(cfg.data_path, cfg.dataset);
  return split(ds, cfg.r_train, cfg.r_valid, cfg.r_test, cfg.split_seed);
}

}  // namespace

std::string report_jsonl(const TrainReport& report) {
  std::ostringstream out;
  for (const EpochRecord& e : report.epochs) {
    json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["seconds"] = e.seconds;
    j["valid"] = eval_json(e.valid);
    out << j.dump() << "\n";
  }
  json tail;
  tail["best_epoch"] = report.best_epoch;
  tail["wall_seconds"] = report.wall_seconds;
  out << tail.dump() << "\n";
  return out.str();
}

std::string metrics_tsv(const EvalResult& r) {
  std::ostringstream out;
  out << "domain\tauc\tlogloss\tn\n";
  auto line = [&](const std::string& name, const MetricRow& row) {
    out << name << "\t" << (row.has_auc ? fixed6(row.auc) : "-") << "\t"
        << fixed6(row.logloss) << "\t" << row.n << "\n";
  };
  for (std::size_t d = 0; d < r.domain.size(); ++d)
    line(std::to_string(d + 1), r.domain[d]);
  line("total", r.total);
  return out.str();
}

std::string sweep_tsv(const std::string& axis,
                      const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << axis << "\tstatus\ttotal_auc\ttotal_logloss\n";
  for (const SweepRow& r : rows) {
    out << r.value << "\t" << (r.ok ? "ok" : "failed") << "\t";
    if (r.ok) {
      out << (r.has_auc ? fixed6(r.auc) : "-") << "\t" << fixed6(r.logloss);
    } else {
      out << "-\t-";
    }
    out << "\n";
  }
  return out.str();
}

std::string compare_tsv(const CompareOutcome& r) {
  std::ostringstream out;
  out << "domain\tbase_auc\tbase_logloss\thamur_auc\thamur_logloss\n";
  auto cell = [&](const MetricRow& row) {
    out << (row.has_auc ? fixed6(row.auc) : "-") << "\t"
        << fixed6(row.logloss);
  };
  for (std::size_t d = 0; d < r.baseline.domain.size(); ++d) {
    out << d + 1 << "\t";
    cell(r.baseline.domain[d]);
    out << "\t";
    cell(r.with_adapters.domain[d]);
    out << "\n";
  }
  out << "total\t";
  cell(r.baseline.total);
  out << "\t";
  cell(r.with_adapters.total);
  out << "\n";
  return out.str();
}

RunOutcome run_train(const ExperimentConfig& cfg, bool log_progress) {
  SplitResult data = load_and_split(cfg);
  HamurModel model(cfg.dataset, cfg.model, cfg.train.seed);
  TrainConfig tc = cfg.train;
  tc.log_progress = log_progress;
  RunOutcome out;
  out.report = train(model, data.train, data.valid, tc);
  out.test = evaluate(model, data.test, cfg.train.macro_total);
  out.config_hash = cfg.hash();
  out.run_dir = cfg.out_dir;

  std::filesystem::create_directories(cfg.out_dir);
  write_file(cfg.out_dir + "/resolved.ini", cfg.resolved().serialize());
  write_file(cfg.out_dir + "/report.jsonl", report_jsonl(out.report));
  write_file(cfg.out_dir + "/metrics.tsv", metrics_tsv(out.test));
  save_checkpoint(model, out.config_hash, cfg.out_dir + "/checkpoint.bin");
  return out;
}

EvalResult run_evaluate(const ExperimentConfig& cfg,
                        const std::string& checkpoint_path,
                        const std::string& split_name) {
  SplitResult data = load_and_split(cfg);
  const Dataset* which = nullptr;
  if (split_name == "train")
    which = &data.train;
  else if (split_name == "valid")
    which = &data.valid;
  else if (split_name == "test")
    which = &data.test;
  else
    throw config_error("unknown split '" + split_name +
                       "' (want train, valid, or test)");
  HamurModel model(cfg.dataset, cfg.model, cfg.train.seed);
  load_checkpoint(model, cfg.hash(), checkpoint_path);
  return evaluate(model, *which, cfg.train.macro_total);
}

namespace {

void check_axis(const std::string& axis) {
  if (axis != "k" && axis != "rep_dim" && axis != "hyper_dim" &&
      axis != "hyper_hidden")
    throw config_error("unknown sweep axis '" + axis +
                       "' (want k or hyper_dim)");
}

ExperimentConfig sweep_point(const ExperimentConfig& base,
                             const std::string& axis, std::size_t value) {
  check_axis(axis);
  ExperimentConfig cfg = base;
  if (axis == "k" || axis == "rep_dim")
    cfg.model.k = value;
  else
    cfg.model.m = value;
  cfg.out_dir =
      base.out_dir + "/sweep-" + axis + "-" + std::to_string(value);
  cfg.validate();
  return cfg;
}

SweepRow sweep_one(const ExperimentConfig& base, const std::string& axis,
                   std::size_t value, bool log_progress) {
  SweepRow row;
  row.value = value;
  try {
    RunOutcome out = run_train(sweep_point(base, axis, value), log_progress);
    row.ok = true;
    row.has_auc = out.test.total.has_auc;
    row.auc = out.test.total.auc;
    row.logloss = out.test.total.logloss;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

std::string row_file(const ExperimentConfig& base, const std::string& axis,
                     std::size_t value) {
  return base.out_dir + "/sweep-" + axis + "-" + std::to_string(value) +
         ".row";
}

void write_row(const std::string& path, const SweepRow& r) {
  std::ostringstream out;
  out << (r.ok ? "ok" : "failed") << "\t" << (r.has_auc ? 1 : 0) << "\t"
      << fmt_double(r.auc) << "\t" << fmt_double(r.logloss) << "\t"
      << r.error << "\n";
  write_file(path, out.str());
}

SweepRow read_row(const std::string& path, std::size_t value) {
  SweepRow r;
  r.value = value;
  std::ifstream in(path);
  if (!in) {
    r.error = "worker produced no result";
    return r;
  }
  std::string status;
  int has_auc = 0;
  in >> status >> has_auc >> r.auc >> r.logloss;
  std::getline(in, r.error);
  r.ok = status == "ok";
  r.has_auc = has_auc != 0;
  if (!r.error.empty() && r.error[0] == '\t') r.error.erase(0, 1);
  return r;
}

}  // namespace

std::vector<SweepRow> run_sweep(const ExperimentConfig& base,
                                const std::string& axis,
                                const std::vector<std::size_t>& values,
                                bool parallel, bool log_progress) {
  if (values.empty()) throw config_error("sweep: no values given");
  // Reject a bad axis up front; bad values fail per row instead.
  check_axis(axis);
  std::filesystem::create_directories(base.out_dir);

  std::vector<SweepRow> rows;
  if (!parallel) {
    for (std::size_t v : values)
      rows.push_back(sweep_one(base, axis, v, log_progress));
    return rows;
  }

  // Fully isolated child process per value; results come back via files.
  std::vector<pid_t> pids;
  for (std::size_t v : values) {
    pid_t pid = fork();
    if (pid < 0) throw data_error("sweep: fork failed");
    if (pid == 0) {
      SweepRow r = sweep_one(base, axis, v, false);
      try {
        write_row(row_file(base, axis, v), r);
      } catch (...) {
      }
      _exit(r.ok ? 0 : 1);
    }
    pids.push_back(pid);
  }
  for (pid_t pid : pids) {
    int status = 0;
    waitpid(pid, &status, 0);
  }
  for (std::size_t v : values)
    rows.push_back(read_row(row_file(base, axis, v), v));
  return rows;
}

CompareOutcome run_compare(const ExperimentConfig& cfg, bool log_progress) {
  if (!cfg.model.adapters)
    throw config_error(
        "compare: config must enable adapters (the baseline arm disables "
        "them itself)");
  ExperimentConfig base = cfg;
  base.model.adapters = false;
  base.model.backbone.sites.clear();
  base.out_dir = cfg.out_dir + "/compare-baseline";
  base.validate();
  ExperimentConfig full = cfg;
  full.out_dir = cfg.out_dir + "/compare-hamur";
  full.validate();

  CompareOutcome out;
  out.baseline = run_train(base, log_progress).test;
  out.with_adapters = run_train(full, log_progress).test;
  std::filesystem::create_directories(cfg.out_dir);
  write_file(cfg.out_dir + "/compare.tsv", compare_tsv(out));
  return out;
}

}  // namespace hamur
