#include <algorithm>
#include <numeric>

#include "nfad/metrics.hpp"

namespace nfad {

double roc_auc(const Vec& scores, const std::vector<Label>& labels) {
  const long n = scores.size();
  require(n == static_cast<long>(labels.size()), "roc_auc: length mismatch");
  require_finite(scores, "roc_auc scores");
  long n_norm = 0;
  for (Label l : labels)
    if (l == Label::normal) ++n_norm;
  const long n_anom = n - n_norm;
  require(n_norm > 0 && n_anom > 0, "roc_auc: need both classes present");

  std::vector<long> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](long a, long b) { return scores(a) < scores(b); });

  // 1-based ranks, ties averaged within each equal-score run
  double rank_sum_normal = 0.0;
  long i = 0;
  while (i < n) {
    long j = i;
    while (j < n && scores(order[static_cast<std::size_t>(j)]) ==
                        scores(order[static_cast<std::size_t>(i)]))
      ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // (i+1 + j)/2
    for (long k = i; k < j; ++k)
      if (labels[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] ==
          Label::normal)
        rank_sum_normal += avg_rank;
    i = j;
  }
  const double nn = static_cast<double>(n_norm);
  const double na = static_cast<double>(n_anom);
  return (rank_sum_normal - nn * (nn + 1.0) / 2.0) / (nn * na);
}

}  // namespace nfad
