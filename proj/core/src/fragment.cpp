//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/fragment.h"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "molcpt/error.h"

namespace molcpt {

std::string_view rule_set_name(RuleSet r) {
  return r == RuleSet::kSimple ? "simple" : "brics16";
}

RuleSet parse_rule_set(std::string_view name) {
  if (name == "simple")
    return RuleSet::kSimple;
  if (name == "brics16")
    return RuleSet::kBrics16;
  throw Error(ErrorCategory::kUsage,
              "unknown rule set '" + std::string(name) + "'");
}

// ---- BRICS environment table ----------------------------------------------

namespace {

constexpr int kC = 6, kN = 7, kO = 8, kS = 16;

bool is_el(const Atom &a, int z) { return a.element == z; }

BondOrder order_between(const MolGraph &g, std::size_t bond) {
  return g.bond(bond).order;
}

bool has_double_to(const MolGraph &g, std::size_t atom, int z) {
  for (const Neighbor &n: g.neighbors(atom))
    if (order_between(g, n.bond) == BondOrder::kDouble
        && is_el(g.atom(n.atom), z))
      return true;
  return false;
}

std::size_t count_double_to(const MolGraph &g, std::size_t atom, int z) {
  std::size_t k = 0;
  for (const Neighbor &n: g.neighbors(atom))
    if (order_between(g, n.bond) == BondOrder::kDouble
        && is_el(g.atom(n.atom), z))
      ++k;
  return k;
}

bool has_double(const MolGraph &g, std::size_t atom) {
  for (const Neighbor &n: g.neighbors(atom))
    if (order_between(g, n.bond) == BondOrder::kDouble)
      return true;
  return false;
}

bool all_single(const MolGraph &g, std::size_t atom) {
  for (const Neighbor &n: g.neighbors(atom))
    if (order_between(g, n.bond) != BondOrder::kSingle)
      return false;
  return true;
}

bool aliphatic(const Atom &a, int z) { return !a.aromatic && a.element == z; }

bool aliphatic_in(const Atom &a, std::initializer_list<int> zs) {
  if (a.aromatic)
    return false;
  return std::find(zs.begin(), zs.end(), a.element) != zs.end();
}

bool aromatic_in(const Atom &a, std::initializer_list<int> zs) {
  if (!a.aromatic)
    return false;
  return std::find(zs.begin(), zs.end(), a.element) != zs.end();
}

// Neighbors reached through ring bonds of the given order.
std::vector<std::size_t> ring_neighbors(const MolGraph &g, std::size_t atom,
                                        BondOrder order) {
  std::vector<std::size_t> out;
  for (const Neighbor &n: g.neighbors(atom)) {
    const Bond &b = g.bond(n.bond);
    if (b.in_ring && b.order == order)
      out.push_back(n.atom);
  }
  return out;
}

// Two distinct neighbors from `nbrs`, the first satisfying p, the second q.
template <class P, class Q>
bool distinct_pair(const MolGraph &g, const std::vector<std::size_t> &nbrs,
                   P p, Q q) {
  for (std::size_t x: nbrs)
    for (std::size_t y: nbrs)
      if (x != y && p(g.atom(x)) && q(g.atom(y)))
        return true;
  return false;
}

// L1: acyl carbon, C(=O) with three heavy neighbors
bool env_l1(const MolGraph &g, std::size_t a, std::size_t) {
  const Atom &x = g.atom(a);
  return aliphatic(x, kC) && g.degree(a) == 3 && has_double_to(g, a, kO);
}

// L3: divalent ether/ester oxygen bonded to carbon
bool env_l3(const MolGraph &g, std::size_t a, std::size_t p) {
  return aliphatic(g.atom(a), kO) && g.degree(a) == 2
         && is_el(g.atom(p), kC);
}

// L4: non-terminal carbon without double bonds, bonded to carbon
bool env_l4(const MolGraph &g, std::size_t a, std::size_t p) {
  return aliphatic(g.atom(a), kC) && g.degree(a) >= 2 && !has_double(g, a)
         && is_el(g.atom(p), kC);
}

// L5: amine nitrogen with only C/S substituents, not a ring lactam N
bool env_l5(const MolGraph &g, std::size_t a, std::size_t) {
  const Atom &x = g.atom(a);
  if (!aliphatic(x, kN) || g.degree(a) < 2 || has_double(g, a))
    return false;
  for (const Neighbor &n: g.neighbors(a)) {
    const Atom &y = g.atom(n.atom);
    if (y.element != kC && y.element != kS)
      return false;
  }
  if (x.in_ring) {
    for (std::size_t c: ring_neighbors(g, a, BondOrder::kSingle))
      if (aliphatic(g.atom(c), kC) && g.atom(c).in_ring
          && has_double_to(g, c, kO))
        return false;
  }
  return true;
}

// L6: acyclic acyl carbon
bool env_l6(const MolGraph &g, std::size_t a, std::size_t p) {
  const Atom &x = g.atom(a);
  return aliphatic(x, kC) && g.degree(a) == 3 && !x.in_ring
         && has_double_to(g, a, kO)
         && (is_el(g.atom(p), kC) || is_el(g.atom(p), kN)
             || is_el(g.atom(p), kO));
}

// L8: acyclic non-terminal sp3 carbon
bool env_l8(const MolGraph &g, std::size_t a, std::size_t) {
  const Atom &x = g.atom(a);
  return aliphatic(x, kC) && !x.in_ring && g.degree(a) >= 2
         && all_single(g, a);
}

// L9: neutral aromatic nitrogen between two aromatic c/n/o/s
bool env_l9(const MolGraph &g, std::size_t a, std::size_t) {
  const Atom &x = g.atom(a);
  if (!(x.aromatic && x.element == kN && x.formal_charge == 0))
    return false;
  auto nb = ring_neighbors(g, a, BondOrder::kAromatic);
  auto arom = [](const Atom &y) { return aromatic_in(y, { kC, kN, kO, kS }); };
  return distinct_pair(g, nb, arom, arom);
}

// L10: lactam nitrogen in a ring next to a ring carbonyl
bool env_l10(const MolGraph &g, std::size_t a, std::size_t) {
  const Atom &x = g.atom(a);
  if (!aliphatic(x, kN) || !x.in_ring)
    return false;
  std::vector<std::size_t> nb;
  for (const Neighbor &n: g.neighbors(a))
    if (g.bond(n.bond).in_ring)
      nb.push_back(n.atom);
  for (std::size_t c: nb) {
    if (!aliphatic(g.atom(c), kC) || !has_double_to(g, c, kO))
      continue;
    for (std::size_t o: nb)
      if (o != c && aliphatic_in(g.atom(o), { kC, kN, kO, kS }))
        return true;
  }
  return false;
}

// L11: thioether sulfur bonded to carbon
bool env_l11(const MolGraph &g, std::size_t a, std::size_t p) {
  return aliphatic(g.atom(a), kS) && g.degree(a) == 2
         && is_el(g.atom(p), kC);
}

// L12: sulfonyl sulfur bonded to carbon
bool env_l12(const MolGraph &g, std::size_t a, std::size_t p) {
  return aliphatic(g.atom(a), kS) && g.degree(a) == 4
         && count_double_to(g, a, kO) == 2 && is_el(g.atom(p), kC);
}

// L13: ring carbon single-bonded in-ring to C/N/O/S and to N/O/S
bool env_l13(const MolGraph &g, std::size_t a, std::size_t) {
  if (!aliphatic(g.atom(a), kC))
    return false;
  auto nb = ring_neighbors(g, a, BondOrder::kSingle);
  return distinct_pair(
      g, nb, [](const Atom &y) { return aliphatic_in(y, { kC, kN, kO, kS }); },
      [](const Atom &y) { return aliphatic_in(y, { kN, kO, kS }); });
}

// L14: aromatic carbon adjacent to an aromatic heteroatom
bool env_l14(const MolGraph &g, std::size_t a, std::size_t) {
  const Atom &x = g.atom(a);
  if (!(x.aromatic && x.element == kC))
    return false;
  auto nb = ring_neighbors(g, a, BondOrder::kAromatic);
  return distinct_pair(
      g, nb, [](const Atom &y) { return aromatic_in(y, { kC, kN, kO, kS }); },
      [](const Atom &y) { return aromatic_in(y, { kN, kO, kS }); });
}

// L15: ring carbon with two single in-ring carbon neighbors
bool env_l15(const MolGraph &g, std::size_t a, std::size_t) {
  if (!aliphatic(g.atom(a), kC))
    return false;
  auto nb = ring_neighbors(g, a, BondOrder::kSingle);
  auto carbon = [](const Atom &y) { return aliphatic(y, kC); };
  return distinct_pair(g, nb, carbon, carbon);
}

// L16: aromatic carbon between two aromatic carbons
bool env_l16(const MolGraph &g, std::size_t a, std::size_t) {
  const Atom &x = g.atom(a);
  if (!(x.aromatic && x.element == kC))
    return false;
  auto nb = ring_neighbors(g, a, BondOrder::kAromatic);
  auto carbon = [](const Atom &y) { return y.aromatic && y.element == kC; };
  return distinct_pair(g, nb, carbon, carbon);
}

constexpr std::array<BricsEnvironment, 14> kEnvironments { {
    { "L1", "acyl carbon C(=O) with three heavy neighbors", env_l1 },
    { "L3", "divalent oxygen bonded to carbon", env_l3 },
    { "L4", "non-terminal carbon without double bonds, bonded to carbon",
      env_l4 },
    { "L5", "amine nitrogen with C/S substituents, not a ring lactam N",
      env_l5 },
    { "L6", "acyclic acyl carbon bonded to C/N/O", env_l6 },
    { "L8", "acyclic non-terminal carbon with only single bonds", env_l8 },
    { "L9", "neutral aromatic nitrogen between aromatic c/n/o/s", env_l9 },
    { "L10", "ring nitrogen next to a ring carbonyl (lactam)", env_l10 },
    { "L11", "thioether sulfur bonded to carbon", env_l11 },
    { "L12", "sulfonyl sulfur bonded to carbon", env_l12 },
    { "L13", "ring carbon single-bonded in ring to C/N/O/S and N/O/S",
      env_l13 },
    { "L14", "aromatic carbon next to an aromatic heteroatom", env_l14 },
    { "L15", "ring carbon with two single in-ring carbon neighbors", env_l15 },
    { "L16", "aromatic carbon between two aromatic carbons", env_l16 },
} };

// L7 (olefinic C=C) pairs a double bond and is excluded: only acyclic single
// bonds are cleaved.
constexpr std::array<std::pair<std::string_view, std::string_view>, 45> kPairs { {
    { "L1", "L3" },   { "L1", "L5" },   { "L1", "L10" },  { "L3", "L4" },
    { "L3", "L13" },  { "L3", "L14" },  { "L3", "L15" },  { "L3", "L16" },
    { "L4", "L5" },   { "L4", "L11" },  { "L5", "L12" },  { "L5", "L13" },
    { "L5", "L14" },  { "L5", "L15" },  { "L5", "L16" },  { "L6", "L13" },
    { "L6", "L14" },  { "L6", "L15" },  { "L6", "L16" },  { "L8", "L9" },
    { "L8", "L10" },  { "L8", "L13" },  { "L8", "L14" },  { "L8", "L15" },
    { "L8", "L16" },  { "L9", "L13" },  { "L9", "L14" },  { "L9", "L15" },
    { "L9", "L16" },  { "L10", "L13" }, { "L10", "L14" }, { "L10", "L15" },
    { "L10", "L16" }, { "L11", "L13" }, { "L11", "L14" }, { "L11", "L15" },
    { "L11", "L16" }, { "L13", "L14" }, { "L13", "L15" }, { "L13", "L16" },
    { "L14", "L14" }, { "L14", "L15" }, { "L14", "L16" }, { "L15", "L16" },
    { "L16", "L16" },
} };

const BricsEnvironment &environment(std::string_view label) {
  for (const BricsEnvironment &e: kEnvironments)
    if (e.label == label)
      return e;
  throw Error(ErrorCategory::kData, "unknown BRICS label");
}

bool brics_cleavable(const MolGraph &g, const Bond &b) {
  for (const auto &[l, r]: kPairs) {
    const BricsEnvironment &el = environment(l), &er = environment(r);
    if (el.matches(g, b.a, b.b) && er.matches(g, b.b, b.a))
      return true;
    if (el.matches(g, b.b, b.a) && er.matches(g, b.a, b.b))
      return true;
  }
  return false;
}

}  // namespace

std::span<const BricsEnvironment> brics_environments() {
  return kEnvironments;
}

std::span<const std::pair<std::string_view, std::string_view>> brics_pairs() {
  return kPairs;
}

// ---- fragmentation --------------------------------------------------------

std::vector<std::size_t> find_cleavage_bonds(const MolGraph &g,
                                             RuleSet rules) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.num_bonds(); ++i) {
    const Bond &b = g.bond(i);
    if (b.in_ring || b.order != BondOrder::kSingle)
      continue;
    bool cut;
    if (rules == RuleSet::kSimple)
      cut = g.degree(b.a) >= 2 && g.degree(b.b) >= 2;
    else
      cut = brics_cleavable(g, b);
    if (cut)
      out.push_back(i);
  }
  return out;
}

std::vector<Motif> fragment_molecule(const MolGraph &g, RuleSet rules) {
  std::vector<bool> removed(g.num_bonds(), false);
  for (std::size_t b: find_cleavage_bonds(g, rules))
    removed[b] = true;
  const std::vector<std::size_t> comp = g.components(removed);

  std::size_t ncomp = 0;
  for (std::size_t c: comp)
    ncomp = std::max(ncomp, c + 1);
  std::vector<std::vector<std::size_t>> groups(ncomp);
  for (std::size_t i = 0; i < comp.size(); ++i)
    groups[comp[i]].push_back(i);

  std::vector<Motif> out;
  out.reserve(ncomp);
  for (auto &atoms: groups) {
    Motif m;
    m.subgraph = g.induced_subgraph(atoms);
    m.key = canonical_key(m.subgraph);
    m.parent_atoms = std::move(atoms);
    out.push_back(std::move(m));
  }
  return out;
}

// ---- vocabulary -----------------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c: bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

MotifVocabulary::MotifVocabulary(RuleSet rules, std::size_t threshold)
    : rules_(rules), threshold_(threshold) {
  entries_.push_back(VocabEntry { std::string(kEmptyMotifKey), 0, MolGraph {} });
  index_.emplace(std::string(kEmptyMotifKey), 0);
}

void MotifVocabulary::append(VocabEntry entry) {
  if (entry.representative.empty() || entry.key == kEmptyMotifKey)
    throw Error(ErrorCategory::kData, "vocabulary entry without atoms");
  if (index_.contains(entry.key))
    throw Error(ErrorCategory::kData, "duplicate vocabulary key " + entry.key);
  index_.emplace(entry.key, entries_.size());
  entries_.push_back(std::move(entry));
}

std::optional<std::size_t> MotifVocabulary::find(std::string_view key) const {
  auto it = index_.find(std::string(key));
  if (it == index_.end())
    return std::nullopt;
  return it->second;
}

std::string MotifVocabulary::serialize() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const VocabEntry &e = entries_[i];
    os << i << '\t' << e.key << '\t' << e.frequency << '\t';
    if (i > 0)
      os << e.key;
    os << '\n';
  }
  return os.str();
}

std::uint64_t MotifVocabulary::hash() const {
  return fnv1a64(serialize());
}

MotifVocabulary MotifVocabulary::deserialize(std::string_view text,
                                             RuleSet rules) {
  MotifVocabulary vocab(rules, 0);
  std::size_t line_no = 0;
  std::size_t min_freq = SIZE_MAX;
  std::istringstream is { std::string(text) };
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos)
        break;
      start = tab + 1;
    }
    const std::string where = "vocabulary line " + std::to_string(line_no + 1);
    if (cols.size() != 4)
      throw Error(ErrorCategory::kData, where + ": expected 4 columns");
    if (cols[0] != std::to_string(line_no))
      throw Error(ErrorCategory::kData, where + ": index out of sequence");
    if (line_no == 0) {
      if (cols[1] != kEmptyMotifKey || cols[2] != "0" || !cols[3].empty())
        throw Error(ErrorCategory::kData, where + ": expected the EMPTY entry");
    } else {
      VocabEntry e;
      e.key = cols[1];
      try {
        e.frequency = std::stoull(cols[2]);
      } catch (const std::exception &) {
        throw Error(ErrorCategory::kData, where + ": bad frequency");
      }
      e.representative = parse_smiles(cols[3]);
      min_freq = std::min(min_freq, e.frequency);
      vocab.append(std::move(e));
    }
    ++line_no;
  }
  if (line_no == 0)
    throw Error(ErrorCategory::kData, "empty vocabulary file");
  // The file does not record t; the smallest retained frequency is the
  // tightest threshold consistent with the contents.
  vocab.threshold_ = min_freq == SIZE_MAX ? 0 : min_freq;
  return vocab;
}

void MotifVocabulary::save(const std::filesystem::path &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCategory::kIo, "cannot write " + path.string());
  out << serialize();
  if (!out)
    throw Error(ErrorCategory::kIo, "write failed: " + path.string());
}

MotifVocabulary MotifVocabulary::load(const std::filesystem::path &path,
                                      RuleSet rules) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCategory::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str(), rules);
}

MotifVocabulary build_vocabulary(std::span<const MolGraph> corpus,
                                 RuleSet rules, std::size_t t) {
  struct Count {
    std::size_t molecules = 0;
    const MolGraph *first = nullptr;
  };
  // keyed by canonical key; representative kept from the first molecule
  std::map<std::string, Count> counts;
  std::vector<std::vector<Motif>> per_molecule;
  per_molecule.reserve(corpus.size());
  for (const MolGraph &g: corpus)
    per_molecule.push_back(fragment_molecule(g, rules));

  for (const auto &motifs: per_molecule) {
    std::set<std::string_view> seen;
    for (const Motif &m: motifs) {
      if (!seen.insert(m.key).second)
        continue;
      Count &c = counts[m.key];
      ++c.molecules;
      if (c.first == nullptr)
        c.first = &m.subgraph;
    }
  }

  std::vector<std::pair<std::string, Count>> kept;
  for (auto &[key, c]: counts)
    if (c.molecules >= t)
      kept.emplace_back(key, c);
  std::stable_sort(kept.begin(), kept.end(), [](const auto &x, const auto &y) {
    if (x.second.molecules != y.second.molecules)
      return x.second.molecules > y.second.molecules;
    return x.first < y.first;
  });

  MotifVocabulary vocab(rules, t);
  for (auto &[key, c]: kept)
    vocab.append(VocabEntry { key, c.molecules, *c.first });
  return vocab;
}

std::vector<std::size_t> motifs_of(const MolGraph &g,
                                   const MotifVocabulary &vocab) {
  std::vector<std::size_t> out;
  for (const Motif &m: fragment_molecule(g, vocab.rules()))
    if (auto idx = vocab.find(m.key))
      out.push_back(*idx);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty())
    out.push_back(0);
  return out;
}

}  // namespace molcpt
