#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hamur/config.hpp"
#include "hamur/errors.hpp"
#include "hamur/prepare.hpp"
#include "hamur/runner.hpp"

namespace {

void ensure_parent_dir(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

hamur::ExperimentConfig load_config(const std::string& path,
                                    const std::string& out_override,
                                    std::uint64_t seed, bool seed_set) {
  hamur::ExperimentConfig cfg = hamur::ExperimentConfig::from_file(path);
  // The single permitted environment override: where artifacts land.
  if (const char* env = std::getenv("HAMUR_OUT"); env && *env)
    cfg.out_dir = env;
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (seed_set) cfg.train.seed = seed;
  return cfg;
}

void print_prepare_summary(const hamur::PrepareResult& r) {
  std::cout << "wrote " << r.rows << " rows to " << r.csv_path << "\n"
            << "wrote field spec to " << r.spec_path << "\n";
  std::size_t total = 0;
  for (std::size_t c : r.domain_counts) total += c;
  for (std::size_t d = 0; d < r.domain_counts.size(); ++d) {
    double share = total ? 100.0 * r.domain_counts[d] / total : 0.0;
    std::cout << "domain " << d + 1 << ": " << r.domain_counts[d] << " ("
              << std::fixed;
    std::cout.precision(1);
    std::cout << share << "%)\n";
    std::cout.unsetf(std::ios::fixed);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"hamur: multi-domain CTR experiments"};
  app.require_subcommand(1);

  // prepare
  auto* prep = app.add_subcommand(
      "prepare", "Convert a raw dataset to the canonical CSV + field spec");
  std::string prep_dataset, prep_raw, prep_out;
  std::size_t prep_rows = 10000, prep_domains = 3;
  std::uint64_t prep_seed = 1;
  int prep_threshold = 4;
  prep->add_option("--dataset", prep_dataset, "movielens or synthetic")
      ->required();
  prep->add_option("--raw", prep_raw,
                   "raw MovieLens-1M directory (users.dat, movies.dat, "
                   "ratings.dat)");
  prep->add_option("--out", prep_out, "output CSV path")->required();
  prep->add_option("--rows", prep_rows, "synthetic: number of rows");
  prep->add_option("--domains", prep_domains, "synthetic: number of domains");
  prep->add_option("--seed", prep_seed, "synthetic: generator seed");
  prep->add_option("--label-threshold", prep_threshold,
                   "movielens: minimum rating that counts as a positive");

  // train
  auto* tr = app.add_subcommand("train", "Train a model from a config file");
  std::string tr_config, tr_out;
  std::uint64_t tr_seed = 0;
  bool tr_quiet = false;
  tr->add_option("--config", tr_config, "experiment config (.ini)")
      ->required();
  tr->add_option("--seed", tr_seed, "override the training seed");
  tr->add_option("--out", tr_out, "override the output directory");
  tr->add_flag("--quiet", tr_quiet, "suppress per-epoch progress lines");

  // evaluate
  auto* ev = app.add_subcommand(
      "evaluate", "Evaluate a saved checkpoint on one data split");
  std::string ev_config, ev_ckpt, ev_split = "test";
  ev->add_option("--config", ev_config, "experiment config (.ini)")
      ->required();
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--split", ev_split, "train, valid, or test");

  // sweep
  auto* sw = app.add_subcommand(
      "sweep", "Train once per value of one hyperparameter axis");
  std::string sw_config, sw_axis, sw_out;
  std::vector<std::size_t> sw_values;
  bool sw_parallel = false, sw_quiet = false;
  sw->add_option("--config", sw_config, "experiment config (.ini)")
      ->required();
  sw->add_option("--axis", sw_axis, "k or hyper_dim")->required();
  sw->add_option("--values", sw_values, "comma-separated positive integers")
      ->required()
      ->delimiter(',');
  sw->add_flag("--parallel", sw_parallel,
               "run each value in an isolated child process");
  sw->add_option("--out", sw_out, "override the output directory");
  sw->add_flag("--quiet", sw_quiet, "suppress per-epoch progress lines");

  // compare
  auto* cp = app.add_subcommand(
      "compare", "Train the plain backbone and backbone+adapters side by side");
  std::string cp_config, cp_out;
  bool cp_quiet = false;
  cp->add_option("--config", cp_config, "experiment config (.ini)")
      ->required();
  cp->add_option("--out", cp_out, "override the output directory");
  cp->add_flag("--quiet", cp_quiet, "suppress per-epoch progress lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (prep->parsed()) {
    ensure_parent_dir(prep_out);
    hamur::PrepareResult r;
    if (prep_dataset == "movielens") {
      if (prep_raw.empty())
        throw hamur::config_error("prepare movielens requires --raw");
      r = hamur::prepare_movielens(prep_raw, prep_out, prep_threshold);
    } else if (prep_dataset == "synthetic") {
      r = hamur::prepare_synthetic(prep_out, prep_rows, prep_domains,
                                   prep_seed);
    } else {
      throw hamur::config_error("unknown dataset '" + prep_dataset +
                                "' (want movielens or synthetic)");
    }
    print_prepare_summary(r);
    return 0;
  }

  if (tr->parsed()) {
    hamur::ExperimentConfig cfg = load_config(
        tr_config, tr_out, tr_seed, tr->count("--seed") > 0);
    hamur::RunOutcome out = hamur::run_train(cfg, !tr_quiet);
    std::cout << hamur::metrics_tsv(out.test);
    std::cerr << "artifacts in " << out.run_dir << "\n";
    return 0;
  }

  if (ev->parsed()) {
    hamur::ExperimentConfig cfg =
        load_config(ev_config, std::string(), 0, false);
    hamur::EvalResult r = hamur::run_evaluate(cfg, ev_ckpt, ev_split);
    std::cout << hamur::metrics_tsv(r);
    return 0;
  }

  if (sw->parsed()) {
    hamur::ExperimentConfig cfg = load_config(sw_config, sw_out, 0, false);
    std::vector<hamur::SweepRow> rows =
        hamur::run_sweep(cfg, sw_axis, sw_values, sw_parallel, !sw_quiet);
    std::string table = hamur::sweep_tsv(sw_axis, rows);
    std::cout << table;
    std::ofstream(cfg.out_dir + "/sweep-" + sw_axis + ".tsv") << table;
    for (const hamur::SweepRow& r : rows)
      if (!r.ok)
        std::cerr << sw_axis << "=" << r.value << " failed: " << r.error
                  << "\n";
    return 0;
  }

  if (cp->parsed()) {
    hamur::ExperimentConfig cfg = load_config(cp_config, cp_out, 0, false);
    hamur::CompareOutcome out = hamur::run_compare(cfg, !cp_quiet);
    std::cout << hamur::compare_tsv(out);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hamur::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const hamur::data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const hamur::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
