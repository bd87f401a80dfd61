//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_FRAGMENT_H_
#define MOLCPT_FRAGMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "molcpt/smiles.h"

namespace molcpt {

enum class RuleSet {
  // Every acyclic single bond between two non-terminal atoms.
  kSimple,
  // Acyclic single bonds matching a retrosynthetic environment pair table.
  kBrics16,
};

std::string_view rule_set_name(RuleSet r);
RuleSet parse_rule_set(std::string_view name);

inline constexpr std::string_view kEmptyMotifKey = "EMPTY";

struct Motif {
  MolGraph subgraph;
  std::string key;
  std::vector<std::size_t> parent_atoms;
};

// Canonical atom ranks (a permutation of 0..n-1) from color refinement with
// individualization; isomorphic graphs get corresponding ranks.
std::vector<std::size_t> canonical_ranks(const MolGraph &g);

// Canonical SMILES of g: equal for isomorphic graphs (atom attributes and
// bond orders included), different otherwise. "EMPTY" for the empty graph.
std::string canonical_key(const MolGraph &g);
inline std::string canonical_key(const Motif &m) {
  return canonical_key(m.subgraph);
}

std::vector<std::size_t> find_cleavage_bonds(const MolGraph &g, RuleSet rules);

// Deletes the cleavage bonds; every connected component becomes a motif.
// Motifs are ordered by their lowest parent atom.
std::vector<Motif> fragment_molecule(const MolGraph &g, RuleSet rules);

// One environment class of the BRICS16 table, tested on `atom` whose bond
// partner is `partner`. Exposed for tests and documentation.
struct BricsEnvironment {
  std::string_view label;
  std::string_view description;
  bool (*matches)(const MolGraph &g, std::size_t atom, std::size_t partner);
};

std::span<const BricsEnvironment> brics_environments();
// Unordered label pairs whose acyclic single bond is cleaved.
std::span<const std::pair<std::string_view, std::string_view>> brics_pairs();

struct VocabEntry {
  std::string key;
  std::size_t frequency = 0;
  MolGraph representative;
};

class MotifVocabulary {
public:
  // Vocabulary holding only the EMPTY motif.
  MotifVocabulary(RuleSet rules = RuleSet::kSimple, std::size_t threshold = 0);

  std::size_t size() const { return entries_.size(); }
  const VocabEntry &operator[](std::size_t i) const { return entries_[i]; }
  std::span<const VocabEntry> entries() const { return entries_; }
  RuleSet rules() const { return rules_; }
  std::size_t threshold() const { return threshold_; }

  std::optional<std::size_t> find(std::string_view key) const;

  // FNV-1a over the serialized file form.
  std::uint64_t hash() const;

  std::string serialize() const;
  static MotifVocabulary deserialize(std::string_view text, RuleSet rules);

  void save(const std::filesystem::path &path) const;
  static MotifVocabulary load(const std::filesystem::path &path,
                              RuleSet rules);

  // Appends a non-empty entry; used by build_vocabulary and deserialize.
  void append(VocabEntry entry);

private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  RuleSet rules_;
  std::size_t threshold_;
};

// Motif keys with molecule-level frequency >= t, sorted by descending
// frequency then key, after EMPTY at index 0.
MotifVocabulary build_vocabulary(std::span<const MolGraph> corpus,
                                 RuleSet rules, std::size_t t);

// Sorted, deduplicated vocabulary indices of g's motifs; {0} if none match.
std::vector<std::size_t> motifs_of(const MolGraph &g,
                                   const MotifVocabulary &vocab);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace molcpt

#endif  // MOLCPT_FRAGMENT_H_
