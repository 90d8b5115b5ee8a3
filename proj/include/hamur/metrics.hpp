#pragma once

#include <cstddef>
#include <vector>

#include "hamur/tensor.hpp"

namespace hamur {

// Rank-based AUC with average ranks for ties; equals pairwise counting
// with ties scored 1/2. Throws metric_error when labels are single-class
// (the metric is undefined there, reported upstream as absent).
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Mean binary cross-entropy with scores clipped to [1e-7, 1 - 1e-7].
double logloss(const std::vector<double>& scores,
               const std::vector<int>& labels);

struct MetricRow {
  bool has_auc = false;
  double auc = 0.0;
  double logloss = 0.0;
  std::size_t n = 0;
};

struct EvalResult {
  std::vector<MetricRow> domain;  // index 0 is domain 1
  MetricRow total;
};

// Per-domain rows plus a total row. The total is computed over the pooled
// predictions of all domains by default; macro_total averages per-domain
// metrics instead (equal weight per domain, domains with undefined AUC
// excluded from the AUC average).
EvalResult summarize(const std::vector<double>& scores,
                     const std::vector<int>& labels,
                     const std::vector<int>& domains, std::size_t num_domains,
                     bool macro_total = false);

}  // namespace hamur
