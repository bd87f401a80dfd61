//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_SWEEP_H_
#define MOLCPT_SWEEP_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "molcpt/dataset.h"
#include "molcpt/fragment.h"
#include "molcpt/metrics.h"
#include "molcpt/model.h"
#include "molcpt/train.h"

namespace molcpt {

// Candidate values per hyperparameter. Ensemble 0 means one randomly
// initialized answer row per label.
struct SweepGrid {
  std::vector<std::size_t> thresholds;
  std::vector<std::size_t> heads;
  std::vector<std::size_t> ensembles;
  std::vector<double> orth;

  // t in 0..100 step 10, heads {2, 4, 8}, ensemble 0..100 step 2, orth in
  // [0, 1e-4] step 5e-6.
  static SweepGrid default_ranges();

  std::size_t size() const;
};

// Text form, either one "key<TAB>values" line per key or "key=values" items
// separated by ';'. Values are "lo:hi:step" or a comma list. Keys are t,
// heads, ensemble, orth; a missing key keeps the single value of `base`.
SweepGrid parse_sweep_grid(std::string_view text, const RunConfig &base,
                           std::size_t base_threshold);

struct SweepPoint {
  std::size_t threshold = 0;
  std::size_t heads = 2;
  std::size_t ensemble = 1;
  double orth = 0.0;

  friend bool operator==(const SweepPoint &, const SweepPoint &) = default;
};

// Point `index` of the grid in row-major order (t slowest, orth fastest).
SweepPoint grid_point(const SweepGrid &grid, std::size_t index);

// The whole grid when it has at most `budget` points, else `budget`
// distinct points drawn with the seed, in draw order.
std::vector<SweepPoint> sweep_points(const SweepGrid &grid, std::size_t budget,
                                     std::uint64_t seed);

struct SweepRow {
  SweepPoint point;
  std::size_t vocab_size = 0;
  // Mean over seeds of the selected epoch's validation AUC.
  std::optional<double> valid_auc;
  std::optional<double> test_auc;
  double test_std = 0.0;
};

struct SweepOptions {
  RunConfig base;
  RuleSet rules = RuleSet::kSimple;
  std::size_t budget = 50;
  std::uint64_t seed = 0;
};

using SweepLogger = std::function<void(std::size_t done, const SweepRow &row)>;

// Runs finetune_run for every sampled point with a vocabulary rebuilt at the
// point's threshold from the training split. Rows come back sorted by
// validation AUC, highest first; points without one go last.
std::vector<SweepRow> sweep(const TaskDataset &ds, const PromptModel &pretrained,
                            const SweepGrid &grid, const SweepOptions &options,
                            const SweepLogger &log = {});

// TSV with header "t\theads\tensemble\torth\tvocab_size\tvalid_auc\ttest_auc\ttest_std".
std::string format_sweep(const std::vector<SweepRow> &rows);

}  // namespace molcpt

#endif  // MOLCPT_SWEEP_H_
