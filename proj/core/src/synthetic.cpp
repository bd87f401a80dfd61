//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/synthetic.h"

#include <array>

#include "molcpt/rng.h"
#include "molcpt/smiles.h"

namespace molcpt {

namespace {

// Ring units written with closure digit 'D', entered at their first atom and
// left from their last.
constexpr std::array<std::string_view, 6> kFillers {
  "C%CCCCC%", "C%CCNCC%", "C%CCOC%", "C%CC%", "C%CCCC%", "c%ccsc%",
};
constexpr std::array<std::string_view, 3> kPlanted { "c%ccccc%", "c%ccccc%", "c%ccccc%" };
// Decoy entries cover the three attachment geometries of the pyridine.
constexpr std::array<std::string_view, 3> kDecoy { "c%ccncc%", "c%cnccc%", "c%ncccc%" };
// Linkers carry the only acyclic substituents.
constexpr std::array<std::string_view, 10> kLinkers {
  "C", "CC", "CCC", "C(=O)N", "OC", "CN", "C(C)C", "C(O)C", "C(F)C", "CC(Cl)C",
};

std::string unit(std::string_view pattern, char digit) {
  std::string out(pattern);
  for (char &c: out)
    if (c == '%')
      c = digit;
  return out;
}

}  // namespace

std::vector<std::pair<std::string, int>> planted_smiles(const PlantedConfig &config) {
  Rng rng(mix_seed(config.seed, 0x706c616eULL));
  std::vector<std::pair<std::string, int>> out;
  out.reserve(config.molecules);
  for (std::size_t i = 0; i < config.molecules; ++i) {
    const int label = i % 2 == 0 ? 1 : 0;
    const std::size_t units = 2 + rng.index(2);
    const std::size_t slot = rng.index(units);
    std::string smiles;
    for (std::size_t u = 0; u < units; ++u) {
      if (u > 0)
        smiles += kLinkers[rng.index(kLinkers.size())];
      const char digit = static_cast<char>('1' + u);
      if (u == slot) {
        const auto &pool = label == 1 ? kPlanted : kDecoy;
        smiles += unit(pool[rng.index(pool.size())], digit);
      } else {
        smiles += unit(kFillers[rng.index(kFillers.size())], digit);
      }
    }
    // Half of the molecules get a terminal group on a trailing linker.
    if (rng.index(2) == 1)
      smiles += kLinkers[rng.index(kLinkers.size())];
    out.emplace_back(std::move(smiles), label);
  }
  rng.shuffle(out);
  return out;
}

TaskDataset planted_dataset(const PlantedConfig &config) {
  TaskDataset ds;
  ds.name = "planted";
  ds.task_names = { "has_motif" };
  for (auto &[smiles, label]: planted_smiles(config)) {
    MolGraph g = parse_smiles(smiles);
    g.set_source_smiles(smiles);
    ds.records.push_back({ std::move(g), { label } });
  }
  return ds;
}

}  // namespace molcpt
