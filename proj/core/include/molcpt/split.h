//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_SPLIT_H_
#define MOLCPT_SPLIT_H_

#include <span>
#include <string>

#include "molcpt/dataset.h"
#include "molcpt/smiles.h"

namespace molcpt {

// Ring systems plus the linkers between them: atoms off every ring path are
// pruned (repeatedly deleting non-ring atoms of degree <= 1). Acyclic
// molecules give the empty graph.
MolGraph murcko_scaffold(const MolGraph &g);

// Canonical key of the scaffold ("EMPTY" for acyclic molecules).
std::string scaffold_key(const MolGraph &g);

struct SplitFractions {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

// Groups molecules by scaffold key, orders ring-scaffold groups by size
// (descending, ties by key) followed by the acyclic group, and places each
// whole group in the first split still below its target size (train, then
// valid), otherwise in test.
Split scaffold_split(std::span<const MolGraph> graphs, SplitFractions f = {});
Split scaffold_split(const TaskDataset &ds, SplitFractions f = {});

}  // namespace molcpt

#endif  // MOLCPT_SPLIT_H_
