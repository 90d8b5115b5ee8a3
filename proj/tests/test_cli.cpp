#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "doctest.h"
#include "hamur/config.hpp"
#include "hamur/errors.hpp"
#include "hamur/prepare.hpp"
#include "hamur/runner.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using hamur::ExperimentConfig;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// A complete tiny experiment on generated data, fast enough to train in
// well under a second.
struct TinyExperiment {
  std::string dir;
  ExperimentConfig cfg;

  explicit TinyExperiment(std::uint64_t data_seed = 31) {
    dir = oracle::temp_dir("cli");
    hamur::PrepareResult prep =
        hamur::prepare_synthetic(dir + "/data.csv", 800, 2, data_seed);

    std::string text =
        "[dataset]\n"
        "path = " + prep.csv_path + "\n"
        "spec = " + prep.spec_path + "\n"
        "split = 0.8,0.1,0.1\n"
        "split_seed = 5\n"
        "[model]\n"
        "backbone = mlp\n"
        "widths = 12\n"
        "sites = 1\n"
        "embedding_size = 4\n"
        "bottleneck = 2\n"
        "hyper_hidden = 4\n"
        "rep_dim = 3\n"
        "[train]\n"
        "batch_size = 128\n"
        "lr = 0.01\n"
        "max_epochs = 2\n"
        "patience = 2\n"
        "seed = 17\n"
        "[output]\n"
        "dir = " + dir + "/run\n";
    std::string path = dir + "/exp.ini";
    std::ofstream(path) << text;
    cfg = ExperimentConfig::from_file(path);
  }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synthetic prepare is byte-deterministic in its seed") {
  std::string dir = oracle::temp_dir("prep");
  hamur::PrepareResult a =
      hamur::prepare_synthetic(dir + "/a.csv", 500, 3, 42);
  hamur::PrepareResult b =
      hamur::prepare_synthetic(dir + "/b.csv", 500, 3, 42);
  hamur::PrepareResult c =
      hamur::prepare_synthetic(dir + "/c.csv", 500, 3, 43);

  CHECK(a.rows == 500);
  CHECK(a.spec.num_domains == 3);
  CHECK(a.csv_path == dir + "/a.csv");
  CHECK(a.spec_path == dir + "/a.spec.ini");
  CHECK(read_text(a.csv_path) == read_text(b.csv_path));
  CHECK(read_text(a.spec_path) == read_text(b.spec_path));
  CHECK(read_text(a.csv_path) != read_text(c.csv_path));

  std::size_t total = 0;
  for (std::size_t n : a.domain_counts) total += n;
  CHECK(total == 500);

  // The sidecar loads back as a usable spec.
  hamur::DatasetSpec spec =
      hamur::spec_from_ini(hamur::IniFile::load(a.spec_path), a.spec_path);
  CHECK(spec.num_domains == 3);
  CHECK(spec.field_index("x1") >= 0);
  CHECK(spec.field_index("domain") >= 0);
}

TEST_CASE("run_train writes the full run directory") {
  TinyExperiment exp;
  hamur::RunOutcome out = hamur::run_train(exp.cfg);

  CHECK(out.run_dir == exp.cfg.out_dir);
  CHECK(fs::exists(exp.cfg.out_dir + "/resolved.ini"));
  CHECK(fs::exists(exp.cfg.out_dir + "/report.jsonl"));
  CHECK(fs::exists(exp.cfg.out_dir + "/metrics.tsv"));
  CHECK(fs::exists(exp.cfg.out_dir + "/checkpoint.bin"));
  CHECK(out.config_hash == exp.cfg.hash());
  CHECK(out.report.epochs.size() >= 1);
  CHECK(out.test.total.n > 0);

  // resolved.ini reproduces the exact configuration.
  ExperimentConfig back =
      ExperimentConfig::from_file(exp.cfg.out_dir + "/resolved.ini");
  CHECK(back.hash() == exp.cfg.hash());
  CHECK(back.train.seed == exp.cfg.train.seed);

  // metrics.tsv holds one row per domain plus a total, 6-decimal fixed.
  std::string tsv = read_text(exp.cfg.out_dir + "/metrics.tsv");
  CHECK(tsv.find("domain\tauc\tlogloss\tn") == 0);
  CHECK(tsv.find("total\t") != std::string::npos);
  CHECK(tsv.find('.') != std::string::npos);

  // report.jsonl: one line per epoch plus a trailer.
  std::string jsonl = read_text(exp.cfg.out_dir + "/report.jsonl");
  std::size_t lines = 0;
  for (char ch : jsonl) lines += (ch == '\n');
  CHECK(lines == out.report.epochs.size() + 1);
  CHECK(jsonl.find("\"train_loss\"") != std::string::npos);
  CHECK(jsonl.find("\"best_epoch\"") != std::string::npos);
}

TEST_CASE("identical reruns reproduce metrics and checkpoints exactly") {
  TinyExperiment exp;
  hamur::RunOutcome first = hamur::run_train(exp.cfg);
  std::string metrics1 = read_text(exp.cfg.out_dir + "/metrics.tsv");
  std::string ckpt1 = read_text(exp.cfg.out_dir + "/checkpoint.bin");

  ExperimentConfig cfg2 = exp.cfg;
  cfg2.out_dir = exp.dir + "/run2";
  hamur::RunOutcome second = hamur::run_train(cfg2);
  CHECK(read_text(cfg2.out_dir + "/metrics.tsv") == metrics1);
  CHECK(read_text(cfg2.out_dir + "/checkpoint.bin") == ckpt1);
  CHECK(first.test.total.logloss == second.test.total.logloss);
}

TEST_CASE("run_evaluate reloads the checkpoint and matches the train run") {
  TinyExperiment exp;
  hamur::RunOutcome out = hamur::run_train(exp.cfg);
  std::string ckpt = exp.cfg.out_dir + "/checkpoint.bin";

  hamur::EvalResult test = hamur::run_evaluate(exp.cfg, ckpt, "test");
  CHECK(test.total.logloss == out.test.total.logloss);
  CHECK(test.total.auc == out.test.total.auc);
  CHECK(test.total.n == out.test.total.n);

  hamur::EvalResult valid = hamur::run_evaluate(exp.cfg, ckpt, "valid");
  hamur::EvalResult tr = hamur::run_evaluate(exp.cfg, ckpt, "train");
  CHECK(valid.total.n + tr.total.n + test.total.n == 800);

  CHECK_THROWS_AS(hamur::run_evaluate(exp.cfg, ckpt, "holdout"),
                  hamur::config_error);

  // A shape-changing edit invalidates the checkpoint.
  ExperimentConfig changed = exp.cfg;
  changed.model.k = 5;
  CHECK_THROWS_AS(hamur::run_evaluate(changed, ckpt, "test"),
                  hamur::data_error);
}

TEST_CASE("a singleton sweep equals a plain training run") {
  TinyExperiment exp;
  hamur::RunOutcome plain = hamur::run_train(exp.cfg);

  ExperimentConfig base = exp.cfg;
  base.out_dir = exp.dir + "/sweep";
  std::vector<hamur::SweepRow> rows =
      hamur::run_sweep(base, "k", {exp.cfg.model.k}, false);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].ok);
  CHECK(rows[0].value == exp.cfg.model.k);
  REQUIRE(rows[0].has_auc);
  CHECK(rows[0].auc == plain.test.total.auc);
  CHECK(rows[0].logloss == plain.test.total.logloss);
}

TEST_CASE("sweeps record failures per value and keep going") {
  TinyExperiment exp;
  ExperimentConfig base = exp.cfg;
  base.out_dir = exp.dir + "/sweep2";
  base.train.max_epochs = 1;
  // rep_dim 0 fails validation; the other value still trains.
  std::vector<hamur::SweepRow> rows =
      hamur::run_sweep(base, "k", {0, 3}, false);
  REQUIRE(rows.size() == 2);
  CHECK_FALSE(rows[0].ok);
  CHECK(!rows[0].error.empty());
  CHECK(rows[1].ok);

  CHECK_THROWS_AS(hamur::run_sweep(base, "widths", {1, 2}, false),
                  hamur::config_error);

  std::string table = hamur::sweep_tsv("k", rows);
  CHECK(table.find("k\tstatus") == 0);
  CHECK(table.find("failed") != std::string::npos);
  CHECK(table.find("ok") != std::string::npos);
}

TEST_CASE("parallel sweeps produce the same rows as sequential ones") {
  TinyExperiment exp;
  ExperimentConfig base = exp.cfg;
  base.train.max_epochs = 1;
  base.out_dir = exp.dir + "/sweep-seq";
  std::vector<hamur::SweepRow> seq =
      hamur::run_sweep(base, "hyper_dim", {2, 4}, false);
  base.out_dir = exp.dir + "/sweep-par";
  std::vector<hamur::SweepRow> par =
      hamur::run_sweep(base, "hyper_dim", {2, 4}, true);

  REQUIRE(seq.size() == par.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i].ok == par[i].ok);
    CHECK(seq[i].value == par[i].value);
    CHECK(seq[i].auc == par[i].auc);          // isolation must not change math
    CHECK(seq[i].logloss == par[i].logloss);
  }
}

TEST_CASE("run_compare trains both arms on the same split") {
  TinyExperiment exp;
  hamur::CompareOutcome cmp = hamur::run_compare(exp.cfg);
  CHECK(cmp.baseline.total.n == cmp.with_adapters.total.n);
  CHECK(cmp.baseline.total.n > 0);

  std::string table = hamur::compare_tsv(cmp);
  CHECK(table.find("domain\tbase_auc") == 0);
  CHECK(table.find("total") != std::string::npos);

  // Deterministic rerun: the comparison table reproduces byte-for-byte.
  ExperimentConfig again = exp.cfg;
  again.out_dir = exp.dir + "/cmp2";
  hamur::CompareOutcome cmp2 = hamur::run_compare(again);
  CHECK(hamur::compare_tsv(cmp2) == table);

  // The ablation needs adapters in the primary arm.
  ExperimentConfig off = exp.cfg;
  off.model.adapters = false;
  off.model.backbone.sites.clear();
  CHECK_THROWS_AS(hamur::run_compare(off), hamur::config_error);
}

TEST_CASE("the binary maps error classes to exit codes") {
  // ctest runs with the build directory as cwd; skip quietly when the
  // binary is elsewhere (e.g. running the test executable by hand).
  if (!fs::exists("./hamur")) {
    MESSAGE("./hamur not found; skipping exit-code checks");
    return;
  }
  auto exit_code = [](const std::string& cmd) {
    int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
    REQUIRE(rc != -1);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  CHECK(exit_code("./hamur --help") == 0);
  CHECK(exit_code("./hamur train") == 2);  // missing required --config
  CHECK(exit_code("./hamur train --config /nonexistent.ini") == 2);
  CHECK(exit_code("./hamur bogus-subcommand") == 2);

  // A well-formed config whose data file is missing: a data error.
  std::string dir = oracle::temp_dir("exitcodes");
  std::ofstream(dir + "/exp.ini")
      << "[dataset]\npath = " << dir << "/missing.csv\n"
      << "[fields]\nx1 = 3\ndomain = 3\n[domains]\ncount = 2\n"
      << "[output]\ndir = " << dir << "/run\n";
  CHECK(exit_code("./hamur train --config " + dir + "/exp.ini") == 3);
}

TEST_CASE("movielens prepare encodes, labels, and groups by age") {
  std::string dir = oracle::temp_dir("ml");
  std::ofstream(dir + "/users.dat")
      << "1::F::1::10::48067\n"
      << "2::M::25::16::70072\n"
      << "3::M::45::15::55117\n"
      << "4::F::18::7::02460\n";
  std::ofstream(dir + "/movies.dat")
      << "10::Toy Story (1995)::Animation|Children's|Comedy\n"
      << "20::Heat (1995)::Action|Crime|Thriller\n"
      << "30::Casablanca (1942)::Drama|Romance\n";
  std::ofstream(dir + "/ratings.dat") << "1::10::5::978300760\n"
                                      << "2::20::3::978302109\n"
                                      << "3::30::4::978301968\n"
                                      << "4::10::2::978300275\n"
                                      << "2::30::5::978824291\n";

  hamur::PrepareResult r = hamur::prepare_movielens(dir, dir + "/ml.csv");
  CHECK(r.rows == 5);
  CHECK(r.spec.num_domains == 3);
  CHECK(r.domain_counts == std::vector<std::size_t>{2, 2, 1});

  // Categorical ids follow sorted string order starting at 1; 0 stays OOV.
  // Ages {1,18} -> domain 1, {25} -> 2, {35,45,50,56} -> 3; a rating of 4
  // or more is a positive label.
  CHECK(read_text(dir + "/ml.csv") ==
        "domain,label,user_id,gender,age,occupation,zip,movie_id,year,"
        "genre\n"
        "1,1,1,1,1,1,2,1,2,2\n"
        "2,0,2,2,3,3,4,2,2,1\n"
        "3,1,3,2,4,2,3,3,1,3\n"
        "1,0,4,1,2,4,1,1,2,2\n"
        "2,1,2,2,3,3,4,3,1,3\n");

  // The field list matches the header, and the result loads cleanly.
  hamur::DatasetSpec spec =
      hamur::spec_from_ini(hamur::IniFile::load(r.spec_path), r.spec_path);
  CHECK(spec.num_domains == 3);
  REQUIRE(spec.num_fields() == 9);
  CHECK(spec.fields[0].name == "user_id");
  CHECK(spec.fields[0].vocab == 5);
  CHECK(spec.fields[6].name == "year");
  CHECK(spec.fields[6].vocab == 3);  // 1942, 1995, OOV
  hamur::Dataset ds = hamur::load_csv(r.csv_path, spec);
  CHECK(ds.size() == 5);
  CHECK(ds.domain_counts() == r.domain_counts);

  // A stricter threshold flips the rating-4 row to negative.
  hamur::PrepareResult strict =
      hamur::prepare_movielens(dir, dir + "/ml5.csv", 5);
  std::string text = read_text(dir + "/ml5.csv");
  CHECK(text.find("3,0,3,2,4,2,3,3,1,3\n") != std::string::npos);

  // Unmapped age codes and short lines are refused, with the line named.
  std::ofstream(dir + "/users.dat", std::ios::app) << "5::M::99::1::11111\n";
  std::ofstream(dir + "/ratings.dat", std::ios::app) << "5::10::4::978\n";
  try {
    hamur::prepare_movielens(dir, dir + "/bad.csv");
    FAIL("expected data_error");
  } catch (const hamur::data_error& e) {
    CHECK(std::string(e.what()).find("age code 99") != std::string::npos);
    CHECK(std::string(e.what()).find("line 6") != std::string::npos);
  }
  std::ofstream(dir + "/movies.dat", std::ios::app) << "40::No Fields Here\n";
  CHECK_THROWS_AS(hamur::prepare_movielens(dir, dir + "/bad2.csv"),
                  hamur::data_error);
}

TEST_CASE("prepared synthetic data round-trips through the loader") {
  std::string dir = oracle::temp_dir("prep2");
  hamur::PrepareResult prep =
      hamur::prepare_synthetic(dir + "/d.csv", 300, 4, 7);
  hamur::DatasetSpec spec =
      hamur::spec_from_ini(hamur::IniFile::load(prep.spec_path),
                           prep.spec_path);
  hamur::Dataset ds = hamur::load_csv(prep.csv_path, spec);
  CHECK(ds.size() == 300);
  CHECK(ds.domain_counts() == prep.domain_counts);
}

}  // TEST_SUITE
