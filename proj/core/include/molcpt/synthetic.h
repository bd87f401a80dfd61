//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_SYNTHETIC_H_
#define MOLCPT_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "molcpt/dataset.h"

namespace molcpt {

// The motif whose presence defines the planted label.
inline constexpr std::string_view kPlantedMotif = "c1ccccc1";
// Its label-0 counterpart, same size and shape with one ring nitrogen.
inline constexpr std::string_view kPlantedDecoy = "c1ccncc1";

struct PlantedConfig {
  std::size_t molecules = 200;
  std::uint64_t seed = 0;
};

// SMILES of 2 or 3 ring units joined by short linkers. Exactly one unit is
// the planted motif in label-1 molecules and the decoy in label-0 molecules;
// the others come from a shared pool of aliphatic and heteroaromatic rings.
// Labels alternate 1, 0, 1, ... before a seeded shuffle.
std::vector<std::pair<std::string, int>> planted_smiles(const PlantedConfig &config);

// Single-task dataset "planted" with task "has_motif" and no split.
TaskDataset planted_dataset(const PlantedConfig &config);

}  // namespace molcpt

#endif  // MOLCPT_SYNTHETIC_H_
