//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_METRICS_H_
#define MOLCPT_METRICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace molcpt {

// Probability that a random positive outranks a random negative, ties
// counting one half. Labels other than 0 and 1 are ignored. Empty when
// either class is absent.
std::optional<double> roc_auc(std::span<const double> scores,
                              std::span<const int> labels);

struct MultiTaskAuc {
  // Mean over tasks with both classes present; empty if there are none.
  std::optional<double> mean;
  std::vector<std::optional<double>> per_task;
};

// scores and labels are row-major n x tasks.
MultiTaskAuc multitask_auc(std::span<const double> scores,
                           std::span<const int> labels, std::size_t tasks);

struct MeanStd {
  double mean = 0.0;
  // Population standard deviation.
  double std = 0.0;
};

MeanStd mean_std(std::span<const double> values);

}  // namespace molcpt

#endif  // MOLCPT_METRICS_H_
