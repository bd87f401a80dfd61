//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "molcpt/error.h"

namespace molcpt {

std::optional<double> roc_auc(std::span<const double> scores,
                              std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorCategory::kShape, "roc_auc: scores and labels differ in length");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (labels[i] == 0 || labels[i] == 1)
      order.push_back(i);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the win count stays integral, so the result is one exact division.
  std::uint64_t twice_wins = 0, negatives_below = 0, positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0, neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? pos : neg) += 1;
      ++j;
    }
    twice_wins += 2 * pos * negatives_below + pos * neg;
    negatives_below += neg;
    positives += pos;
    i = j;
  }
  if (positives == 0 || negatives_below == 0)
    return std::nullopt;
  return (static_cast<double>(twice_wins) / 2.0)
         / static_cast<double>(positives * negatives_below);
}

MultiTaskAuc multitask_auc(std::span<const double> scores,
                           std::span<const int> labels, std::size_t tasks) {
  if (tasks == 0 || scores.size() != labels.size() || scores.size() % tasks != 0)
    throw Error(ErrorCategory::kShape, "multitask_auc: inconsistent shapes");
  const std::size_t n = scores.size() / tasks;
  MultiTaskAuc out;
  double total = 0.0;
  std::size_t valid = 0;
  for (std::size_t t = 0; t < tasks; ++t) {
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = scores[i * tasks + t];
      l[i] = labels[i * tasks + t];
    }
    out.per_task.push_back(roc_auc(s, l));
    if (out.per_task.back()) {
      total += *out.per_task.back();
      ++valid;
    }
  }
  if (valid > 0)
    out.mean = total / static_cast<double>(valid);
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty())
    return r;
  r.mean = std::accumulate(values.begin(), values.end(), 0.0)
           / static_cast<double>(values.size());
  double var = 0.0;
  for (double v: values)
    var += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(var / static_cast<double>(values.size()));
  return r;
}

}  // namespace molcpt
