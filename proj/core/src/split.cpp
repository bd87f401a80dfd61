//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/split.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "molcpt/error.h"
#include "molcpt/fragment.h"

namespace molcpt {

MolGraph murcko_scaffold(const MolGraph &g) {
  const MolGraph flagged = ring_flags(g);
  const std::size_t n = flagged.num_atoms();
  std::vector<bool> alive(n, true);
  std::vector<std::size_t> degree(n);
  for (std::size_t a = 0; a < n; ++a)
    degree[a] = flagged.degree(a);

  std::vector<std::size_t> queue;
  for (std::size_t a = 0; a < n; ++a)
    if (!flagged.atom(a).in_ring && degree[a] <= 1)
      queue.push_back(a);
  while (!queue.empty()) {
    const std::size_t a = queue.back();
    queue.pop_back();
    if (!alive[a])
      continue;
    alive[a] = false;
    for (const Neighbor &nb: flagged.neighbors(a)) {
      if (!alive[nb.atom])
        continue;
      if (--degree[nb.atom] <= 1 && !flagged.atom(nb.atom).in_ring)
        queue.push_back(nb.atom);
    }
  }
  std::vector<std::size_t> keep;
  for (std::size_t a = 0; a < n; ++a)
    if (alive[a])
      keep.push_back(a);
  return flagged.induced_subgraph(keep);
}

std::string scaffold_key(const MolGraph &g) {
  return canonical_key(murcko_scaffold(g));
}

Split scaffold_split(std::span<const MolGraph> graphs, SplitFractions f) {
  if (f.train < 0 || f.valid < 0 || f.test < 0
      || std::abs(f.train + f.valid + f.test - 1.0) > 1e-9)
    throw Error(ErrorCategory::kUsage, "split fractions must be non-negative and sum to 1");

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < graphs.size(); ++i)
    groups[scaffold_key(graphs[i])].push_back(i);

  std::vector<const std::pair<const std::string, std::vector<std::size_t>> *> order;
  const std::vector<std::size_t> *acyclic = nullptr;
  for (const auto &entry: groups) {
    if (entry.first == kEmptyMotifKey)
      acyclic = &entry.second;
    else
      order.push_back(&entry);
  }
  std::stable_sort(order.begin(), order.end(), [](const auto *a, const auto *b) {
    return a->second.size() > b->second.size();
  });

  const double n = static_cast<double>(graphs.size());
  const double train_target = f.train * n, valid_target = f.valid * n;
  Split s;
  auto place = [&](const std::vector<std::size_t> &members) {
    std::vector<std::size_t> *dst = &s.test;
    if (static_cast<double>(s.train.size()) < train_target - 1e-9)
      dst = &s.train;
    else if (static_cast<double>(s.valid.size()) < valid_target - 1e-9)
      dst = &s.valid;
    dst->insert(dst->end(), members.begin(), members.end());
  };
  for (const auto *entry: order)
    place(entry->second);
  if (acyclic)
    place(*acyclic);
  for (auto *part: { &s.train, &s.valid, &s.test })
    std::sort(part->begin(), part->end());
  return s;
}

Split scaffold_split(const TaskDataset &ds, SplitFractions f) {
  std::vector<MolGraph> graphs;
  graphs.reserve(ds.records.size());
  for (const Record &r: ds.records)
    graphs.push_back(r.graph);
  return scaffold_split(graphs, f);
}

}  // namespace molcpt
