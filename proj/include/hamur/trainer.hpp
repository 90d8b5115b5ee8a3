#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hamur/dataio.hpp"
#include "hamur/metrics.hpp"
#include "hamur/model.hpp"

namespace hamur {

struct TrainConfig {
  std::size_t batch_size = 2048;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;  // epochs without validation improvement
  AdamConfig adam;
  std::uint64_t seed = 7;
  bool macro_total = false;
  bool log_progress = false;  // per-epoch line on stderr
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  EvalResult valid;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based; 0 if training never evaluated
  double wall_seconds = 0.0;
};

// Epoch loop: shuffled batches, forward, loss, backward, Adam; validation
// after each epoch; early stop on the total validation AUC (falling back
// to negative LogLoss when AUC is undefined); the best-epoch state is
// restored before returning. Deterministic given config and seed. Throws
// numeric_error naming the step if the loss leaves the finite range.
TrainReport train(HamurModel& model, const Dataset& train_ds,
                  const Dataset& valid_ds, const TrainConfig& cfg);

// Eval-mode metrics of a model over a dataset.
EvalResult evaluate(HamurModel& model, const Dataset& ds,
                    bool macro_total = false);

}  // namespace hamur
