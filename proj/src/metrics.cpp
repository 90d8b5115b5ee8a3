#include "hamur/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hamur/errors.hpp"

namespace hamur {

double auc(const std::vector<double>& scores,
           const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw metric_error("auc: " + std::to_string(scores.size()) +
                       " scores vs " + std::to_string(labels.size()) +
                       " labels");
  std::size_t n = scores.size();
  std::size_t pos = 0;
  for (int y : labels) pos += (y != 0);
  std::size_t neg = n - pos;
  if (pos == 0 || neg == 0)
    throw metric_error("auc: undefined for single-class labels (" +
                       std::to_string(pos) + " positives of " +
                       std::to_string(n) + ")");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Average 1-based ranks over tie groups, summed for positives.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // (i+1 + j) / 2
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] != 0) pos_rank_sum += avg_rank;
    i = j;
  }
  double np = static_cast<double>(pos), nn = static_cast<double>(neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double logloss(const std::vector<double>& scores,
               const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw metric_error("logloss: " + std::to_string(scores.size()) +
                       " scores vs " + std::to_string(labels.size()) +
                       " labels");
  if (scores.empty()) throw metric_error("logloss: empty input");
  constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
  double acc = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    double p = std::min(hi, std::max(lo, scores[i]));
    acc += labels[i] != 0 ? -std::log(p) : -std::log(1.0 - p);
  }
  return acc / static_cast<double>(scores.size());
}

EvalResult summarize(const std::vector<double>& scores,
                     const std::vector<int>& labels,
                     const std::vector<int>& domains,
                     std::size_t num_domains, bool macro_total) {
  if (scores.size() != labels.size() || scores.size() != domains.size())
    throw metric_error("summarize: input length mismatch");
  EvalResult res;
  res.domain.resize(num_domains);

  auto fill = [](MetricRow& row, const std::vector<double>& s,
                 const std::vector<int>& y) {
    row.n = s.size();
    if (s.empty()) return;
    row.logloss = logloss(s, y);
    try {
      row.auc = auc(s, y);
      row.has_auc = true;
    } catch (const metric_error&) {
      row.has_auc = false;  // single-class domain: AUC reported absent
    }
  };

  for (std::size_t d = 1; d <= num_domains; ++d) {
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (domains[i] == static_cast<int>(d)) {
        s.push_back(scores[i]);
        y.push_back(labels[i]);
      }
    }
    fill(res.domain[d - 1], s, y);
  }

  if (macro_total) {
    MetricRow& t = res.total;
    double auc_acc = 0.0, ll_acc = 0.0;
    std::size_t auc_cnt = 0, ll_cnt = 0;
    for (const MetricRow& row : res.domain) {
      t.n += row.n;
      if (row.n == 0) continue;
      ll_acc += row.logloss;
      ++ll_cnt;
      if (row.has_auc) {
        auc_acc += row.auc;
        ++auc_cnt;
      }
    }
    if (ll_cnt) t.logloss = ll_acc / static_cast<double>(ll_cnt);
    if (auc_cnt) {
      t.auc = auc_acc / static_cast<double>(auc_cnt);
      t.has_auc = true;
    }
  } else {
    fill(res.total, scores, labels);
  }
  return res;
}

}  // namespace hamur
