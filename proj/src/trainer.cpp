#include "hamur/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "hamur/binding.hpp"
#include "hamur/errors.hpp"

namespace hamur {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

// Early-stopping score: higher is better.
double stop_metric(const EvalResult& r) {
  return r.total.has_auc ? r.total.auc : -r.total.logloss;
}

}  // namespace

EvalResult evaluate(HamurModel& model, const Dataset& ds, bool macro_total) {
  std::vector<double> scores = model.predict(ds);
  std::vector<int> labels(ds.size()), domains(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    labels[i] = ds.labels[i];
    domains[i] = ds.domains[i];
  }
  return summarize(scores, labels, domains, ds.spec.num_domains, macro_total);
}

TrainReport train(HamurModel& model, const Dataset& train_ds,
                  const Dataset& valid_ds, const TrainConfig& cfg) {
  if (train_ds.size() == 0) throw data_error("train: empty training split");
  TrainReport report;
  double t0 = now_seconds();
  double best = 0.0;
  HamurModel::Snapshot best_state;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double e0 = now_seconds();
    BatchStream stream(train_ds, cfg.batch_size, cfg.seed, epoch);
    Batch batch;
    double loss_sum = 0.0;
    std::size_t seen = 0, step = 0;
    while (stream.next(batch)) {
      ++step;
      Tape t;
      LeafMap lm(t, model.params(), true);
      Var preds = model.forward_batch(t, lm, batch, true);
      Var loss = bce_loss(t, preds, batch.flat_labels());
      double lv = t.val(loss)[0];
      if (!std::isfinite(lv))
        throw numeric_error("training diverged at epoch " +
                            std::to_string(epoch) + " step " +
                            std::to_string(step) + " (loss not finite)");
      t.backward(loss);
      lm.apply_adam(cfg.adam);
      loss_sum += lv * static_cast<double>(batch.size);
      seen += batch.size;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    if (valid_ds.size() > 0)
      rec.valid = evaluate(model, valid_ds, cfg.macro_total);
    rec.seconds = now_seconds() - e0;
    report.epochs.push_back(rec);
    if (cfg.log_progress) {
      std::fprintf(stderr,
                   "epoch %zu: train_loss %.6f valid_auc %s (%.1fs)\n",
                   epoch, rec.train_loss,
                   rec.valid.total.has_auc
                       ? std::to_string(rec.valid.total.auc).c_str()
                       : "-",
                   rec.seconds);
    }

    if (valid_ds.size() > 0) {
      double metric = stop_metric(rec.valid);
      if (report.best_epoch == 0 || metric > best) {
        best = metric;
        report.best_epoch = epoch;
        best_state = model.snapshot();
        stale = 0;
      } else if (++stale >= cfg.patience) {
        break;
      }
    }
  }

  if (report.best_epoch != 0) model.restore(best_state);
  report.wall_seconds = now_seconds() - t0;
  return report;
}

}  // namespace hamur
