//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_TESTS_RANDOM_MOLECULES_H_
#define MOLCPT_TESTS_RANDOM_MOLECULES_H_

#include <cstddef>
#include <string>
#include <vector>

#include "molcpt/rng.h"
#include "molcpt/smiles.h"

namespace molcpt::testing {

// SMILES assembled from a pool of chain/ring building blocks with random
// branching. Built as text so parser tests do not depend on the writer.
std::string random_smiles(Rng &rng, std::size_t max_blocks = 6);

// Random connected graph: a random spanning tree plus `extra_edges` chords,
// random element/aromatic labels and bond orders. Ring flags assigned.
MolGraph random_graph(Rng &rng, std::size_t atoms, std::size_t extra_edges);

std::vector<std::size_t> random_permutation(Rng &rng, std::size_t n);

}  // namespace molcpt::testing

#endif  // MOLCPT_TESTS_RANDOM_MOLECULES_H_
