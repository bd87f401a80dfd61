//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_SMILES_H_
#define MOLCPT_SMILES_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace molcpt {

inline constexpr int kMaxElement = 118;

// Symbol for atomic number z in [1, 118]; empty view otherwise.
std::string_view element_symbol(int z);
// Atomic number for a capitalized symbol ("C", "Cl"); 0 if unknown.
int element_number(std::string_view symbol);

enum class BondOrder : std::uint8_t {
  kSingle = 1,
  kDouble = 2,
  kTriple = 3,
  kAromatic = 4,
};

inline constexpr std::size_t kBondOrderCount = 4;

// 0-based index of a bond order, for embedding tables.
inline std::size_t bond_order_index(BondOrder o) {
  return static_cast<std::size_t>(o) - 1;
}

struct Atom {
  int element = 6;
  bool aromatic = false;
  int formal_charge = 0;
  // Hydrogens written inside a bracket atom.
  int explicit_h = 0;
  // Hydrogens implied by default valence (organic-subset atoms only). Never
  // materialized as graph nodes.
  int implicit_h = 0;
  bool bracket = false;
  bool in_ring = false;
  // Attribute-masked atom (pretraining); the encoder substitutes a MASK row.
  bool masked = false;
};

// Attributes that identify an atom for canonicalization and isomorphism.
using AtomLabel = std::tuple<int, bool, int, int, bool>;

inline AtomLabel atom_label(const Atom &a) {
  return { a.element, a.aromatic, a.formal_charge, a.explicit_h, a.bracket };
}

struct Bond {
  std::size_t a = 0;
  std::size_t b = 0;
  BondOrder order = BondOrder::kSingle;
  bool in_ring = false;

  std::size_t other(std::size_t atom) const { return atom == a ? b : a; }
};

struct Neighbor {
  std::size_t atom;
  std::size_t bond;
};

class MolGraph {
public:
  MolGraph() = default;

  std::size_t add_atom(const Atom &atom);
  // Rejects out-of-range endpoints, self-loops, and duplicate bonds.
  std::size_t add_bond(std::size_t a, std::size_t b, BondOrder order);

  std::size_t num_atoms() const { return atoms_.size(); }
  std::size_t num_bonds() const { return bonds_.size(); }
  bool empty() const { return atoms_.empty(); }

  const std::vector<Atom> &atoms() const { return atoms_; }
  const std::vector<Bond> &bonds() const { return bonds_; }
  const Atom &atom(std::size_t i) const { return atoms_[i]; }
  Atom &atom(std::size_t i) { return atoms_[i]; }
  const Bond &bond(std::size_t i) const { return bonds_[i]; }
  Bond &bond(std::size_t i) { return bonds_[i]; }

  std::span<const Neighbor> neighbors(std::size_t atom) const {
    return adjacency_[atom];
  }
  std::size_t degree(std::size_t atom) const {
    return adjacency_[atom].size();
  }
  std::optional<std::size_t> bond_between(std::size_t a, std::size_t b) const;

  const std::string &source_smiles() const { return source_; }
  void set_source_smiles(std::string s) { source_ = std::move(s); }

  // Set when some atom exceeds its default valence; such inputs are accepted.
  bool valence_warning() const { return valence_warning_; }
  void set_valence_warning(bool w) { valence_warning_ = w; }

  // Subgraph induced on `atoms`, in the given order; attributes (including
  // ring flags) are copied from this graph.
  MolGraph induced_subgraph(std::span<const std::size_t> atoms) const;

  // Copy with atom i moved to position perm[i].
  MolGraph permuted(std::span<const std::size_t> perm) const;

  // Component label per atom (labels dense from 0, in order of first atom).
  std::vector<std::size_t> components() const;
  std::vector<std::size_t> components(const std::vector<bool> &removed_bonds) const;

  friend bool operator==(const MolGraph &x, const MolGraph &y);

private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::string source_;
  bool valence_warning_ = false;
};

bool operator==(const Atom &x, const Atom &y);
bool operator==(const Bond &x, const Bond &y);

// Parses the supported SMILES subset: organic-subset and bracket atoms,
// bonds - = # :, branches, ring closures (digits and %nn), dot-separated
// components. Stereo markers are accepted and dropped. Throws ParseError.
MolGraph parse_smiles(std::string_view text);

// Returns a copy of g with bond/atom ring membership recomputed: a bond is
// in a ring iff it is not a bridge, an atom iff it touches a ring bond.
MolGraph ring_flags(MolGraph g);
void assign_ring_flags(MolGraph &g);

// Indices of bridge bonds.
std::vector<std::size_t> find_bridges(const MolGraph &g);

// Recomputes implicit hydrogens and the valence warning.
void assign_implicit_hydrogens(MolGraph &g);

// Writes g as SMILES, starting each component at its lowest-ranked atom and
// visiting neighbors in rank order. rank must be a permutation of atoms.
// Bond symbols are written only where the parser default would differ, so
// parse_smiles(write_smiles(g, r)) reproduces g's topology and attributes.
std::string write_smiles(const MolGraph &g, std::span<const std::size_t> rank);
// Writes with identity ranks.
std::string write_smiles(const MolGraph &g);

}  // namespace molcpt

#endif  // MOLCPT_SMILES_H_
