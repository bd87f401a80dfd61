//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/smiles.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <numeric>
#include <utility>

#include "molcpt/error.h"

namespace molcpt {

namespace {

constexpr std::array<std::string_view, kMaxElement + 1> kSymbols {
  "",   "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na",
  "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",
  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br",
  "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag",
  "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
  "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu",
  "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi",
  "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am",
  "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh",
  "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
};

bool is_organic_subset(int z) {
  switch (z) {
  case 5:
  case 6:
  case 7:
  case 8:
  case 9:
  case 15:
  case 16:
  case 17:
  case 35:
  case 53:
    return true;
  default:
    return false;
  }
}

bool may_be_aromatic(int z) {
  switch (z) {
  case 5:   // b
  case 6:   // c
  case 7:   // n
  case 8:   // o
  case 15:  // p
  case 16:  // s
  case 33:  // as
  case 34:  // se
  case 52:  // te
    return true;
  default:
    return false;
  }
}

// Allowed default valences, ascending.
std::span<const int> default_valences(int z) {
  static constexpr int kB[] = { 3 }, kC[] = { 4 }, kN[] = { 3 }, kO[] = { 2 },
                       kP[] = { 3, 5 }, kS[] = { 2, 4, 6 }, kHal[] = { 1 };
  switch (z) {
  case 5:
    return kB;
  case 6:
    return kC;
  case 7:
    return kN;
  case 8:
    return kO;
  case 15:
    return kP;
  case 16:
    return kS;
  case 9:
  case 17:
  case 35:
  case 53:
    return kHal;
  default:
    return {};
  }
}

int bond_valence(BondOrder o) {
  return o == BondOrder::kAromatic ? 1 : static_cast<int>(o);
}

class Parser {
public:
  explicit Parser(std::string_view text): s_(text) { }

  MolGraph run();

private:
  struct RingOpen {
    std::size_t atom;
    std::optional<BondOrder> order;
    std::size_t pos;
  };

  [[noreturn]] void fail(const std::string &msg) const {
    throw ParseError(i_, msg);
  }
  [[noreturn]] void fail(std::size_t pos, const std::string &msg) const {
    throw ParseError(pos, msg);
  }

  bool done() const { return i_ >= s_.size() || s_[i_] == ' '
                             || s_[i_] == '\t'; }
  char peek(std::size_t off = 0) const {
    return i_ + off < s_.size() ? s_[i_ + off] : '\0';
  }

  void add_bond(std::size_t a, std::size_t b, std::optional<BondOrder> order,
                std::size_t pos);
  std::size_t parse_organic();
  std::size_t parse_bracket();
  void parse_ring_closure(std::size_t number, std::size_t pos);
  int parse_number();

  std::string_view s_;
  std::size_t i_ = 0;
  MolGraph g_;
  std::vector<bool> unspecified_;
  std::optional<std::size_t> prev_;
  std::optional<BondOrder> pending_;
  std::size_t pending_pos_ = 0;
  std::map<std::size_t, RingOpen> rings_;
};

void Parser::add_bond(std::size_t a, std::size_t b,
                      std::optional<BondOrder> order, std::size_t pos) {
  if (a == b)
    fail(pos, "ring closure bonds an atom to itself");
  if (g_.bond_between(a, b))
    fail(pos, "duplicate bond");
  g_.add_bond(a, b, order.value_or(BondOrder::kSingle));
  unspecified_.push_back(!order.has_value());
}

int Parser::parse_number() {
  int v = 0;
  bool any = false;
  while (std::isdigit(static_cast<unsigned char>(peek()))) {
    v = v * 10 + (peek() - '0');
    ++i_;
    any = true;
    if (v > 1000000)
      fail("number too large");
  }
  return any ? v : -1;
}

std::size_t Parser::parse_organic() {
  Atom atom;
  const char c = peek();
  if (c == 'C' && peek(1) == 'l') {
    atom.element = 17;
    i_ += 2;
  } else if (c == 'B' && peek(1) == 'r') {
    atom.element = 35;
    i_ += 2;
  } else {
    switch (c) {
    case 'B':
      atom.element = 5;
      break;
    case 'C':
      atom.element = 6;
      break;
    case 'N':
      atom.element = 7;
      break;
    case 'O':
      atom.element = 8;
      break;
    case 'P':
      atom.element = 15;
      break;
    case 'S':
      atom.element = 16;
      break;
    case 'F':
      atom.element = 9;
      break;
    case 'I':
      atom.element = 53;
      break;
    case 'b':
      atom.element = 5;
      atom.aromatic = true;
      break;
    case 'c':
      atom.element = 6;
      atom.aromatic = true;
      break;
    case 'n':
      atom.element = 7;
      atom.aromatic = true;
      break;
    case 'o':
      atom.element = 8;
      atom.aromatic = true;
      break;
    case 'p':
      atom.element = 15;
      atom.aromatic = true;
      break;
    case 's':
      atom.element = 16;
      atom.aromatic = true;
      break;
    default:
      fail(std::string("unknown element symbol '") + c + "'");
    }
    ++i_;
  }
  return g_.add_atom(atom);
}

std::size_t Parser::parse_bracket() {
  const std::size_t open = i_;
  ++i_;  // '['
  parse_number();  // isotope, dropped

  Atom atom;
  atom.bracket = true;
  const char c = peek();
  if (std::islower(static_cast<unsigned char>(c))) {
    // aromatic symbols: b c n o p s se as te
    std::string sym(1, static_cast<char>(std::toupper(c)));
    if ((c == 's' && peek(1) == 'e') || (c == 'a' && peek(1) == 's')
        || (c == 't' && peek(1) == 'e')) {
      sym += peek(1);
      i_ += 2;
    } else {
      ++i_;
    }
    atom.element = element_number(sym);
    atom.aromatic = true;
    if (atom.element == 0 || !may_be_aromatic(atom.element))
      fail(i_ - sym.size(), "unknown aromatic symbol '" + sym + "'");
  } else if (std::isupper(static_cast<unsigned char>(c))) {
    int z = 0;
    if (std::islower(static_cast<unsigned char>(peek(1)))) {
      z = element_number(s_.substr(i_, 2));
      if (z != 0)
        i_ += 2;
    }
    if (z == 0) {
      z = element_number(s_.substr(i_, 1));
      if (z == 0)
        fail("unknown element symbol '" + std::string(1, c) + "'");
      ++i_;
    }
    atom.element = z;
  } else {
    fail("expected element symbol in bracket atom");
  }

  // chirality, dropped
  while (peek() == '@')
    ++i_;
  if (i_ > open && s_[i_ - 1] == '@') {
    for (std::string_view cls: { "TH", "AL", "SP", "TB", "OH" }) {
      if (s_.substr(i_, 2) == cls) {
        i_ += 2;
        parse_number();
        break;
      }
    }
  }

  if (peek() == 'H') {
    ++i_;
    const int n = parse_number();
    atom.explicit_h = n < 0 ? 1 : n;
  }

  if (peek() == '+' || peek() == '-') {
    const char sign = peek();
    const int unit = sign == '+' ? 1 : -1;
    ++i_;
    const int n = parse_number();
    if (n >= 0) {
      atom.formal_charge = unit * n;
    } else {
      atom.formal_charge = unit;
      while (peek() == sign) {
        atom.formal_charge += unit;
        ++i_;
      }
    }
  }

  if (peek() == ':') {
    ++i_;
    if (parse_number() < 0)
      fail("expected atom class number");
  }

  if (peek() != ']')
    fail(open, "unterminated bracket atom");
  ++i_;
  return g_.add_atom(atom);
}

void Parser::parse_ring_closure(std::size_t number, std::size_t pos) {
  if (!prev_)
    fail(pos, "ring closure without a preceding atom");

  auto it = rings_.find(number);
  if (it == rings_.end()) {
    rings_.emplace(number, RingOpen { *prev_, pending_, pos });
    pending_.reset();
    return;
  }

  const RingOpen open = it->second;
  rings_.erase(it);
  std::optional<BondOrder> order = pending_ ? pending_ : open.order;
  if (pending_ && open.order && *pending_ != *open.order)
    fail(pos, "conflicting ring closure bond orders");
  pending_.reset();
  add_bond(open.atom, *prev_, order, pos);
}

MolGraph Parser::run() {
  if (s_.empty() || done())
    fail(0, "empty SMILES");

  std::vector<std::size_t> branches;
  std::vector<std::size_t> branch_pos;
  bool expect_atom = true;  // at start or after '.'

  while (!done()) {
    const char c = peek();
    const std::size_t pos = i_;

    switch (c) {
    case '(':
      if (!prev_ || expect_atom)
        fail("branch without a preceding atom");
      if (pending_)
        fail("bond symbol before branch");
      branches.push_back(*prev_);
      branch_pos.push_back(pos);
      ++i_;
      continue;
    case ')':
      if (branches.empty())
        fail("unmatched ')'");
      if (pending_)
        fail("dangling bond before ')'");
      prev_ = branches.back();
      branches.pop_back();
      branch_pos.pop_back();
      ++i_;
      continue;
    case '.':
      if (pending_)
        fail("dangling bond before '.'");
      if (!branches.empty())
        fail("'.' inside a branch");
      prev_.reset();
      expect_atom = true;
      ++i_;
      continue;
    case '-':
    case '=':
    case '#':
    case ':':
    case '/':
    case '\\':
      if (!prev_)
        fail("bond without a preceding atom");
      if (pending_)
        fail("consecutive bond symbols");
      pending_pos_ = pos;
      if (c == '-')
        pending_ = BondOrder::kSingle;
      else if (c == '=')
        pending_ = BondOrder::kDouble;
      else if (c == '#')
        pending_ = BondOrder::kTriple;
      else if (c == ':')
        pending_ = BondOrder::kAromatic;
      // '/' and '\' are directional single bonds; direction is dropped and
      // the order resolves like an unspecified bond.
      ++i_;
      continue;
    case '%': {
      ++i_;
      if (!std::isdigit(static_cast<unsigned char>(peek()))
          || !std::isdigit(static_cast<unsigned char>(peek(1))))
        fail(pos, "expected two digits after '%'");
      const std::size_t n = static_cast<std::size_t>((peek() - '0') * 10
                                                     + (peek(1) - '0'));
      i_ += 2;
      if (expect_atom)
        fail(pos, "ring closure without a preceding atom");
      parse_ring_closure(n, pos);
      continue;
    }
    default:
      break;
    }

    if (std::isdigit(static_cast<unsigned char>(c))) {
      if (expect_atom)
        fail("ring closure without a preceding atom");
      ++i_;
      parse_ring_closure(static_cast<std::size_t>(c - '0'), pos);
      continue;
    }

    std::size_t atom;
    if (c == '[')
      atom = parse_bracket();
    else
      atom = parse_organic();

    if (prev_ && !expect_atom) {
      add_bond(*prev_, atom, pending_, pending_ ? pending_pos_ : pos);
    } else if (pending_) {
      fail(pending_pos_, "bond without a preceding atom");
    }
    pending_.reset();
    prev_ = atom;
    expect_atom = false;
  }

  if (pending_)
    fail(pending_pos_, "dangling bond at end of input");
  if (!branches.empty())
    fail(branch_pos.back(), "unmatched '('");
  if (!rings_.empty())
    fail(rings_.begin()->second.pos,
         "unmatched ring closure " + std::to_string(rings_.begin()->first));
  if (expect_atom)
    fail("expected an atom");

  assign_ring_flags(g_);
  for (std::size_t b = 0; b < g_.num_bonds(); ++b) {
    if (!unspecified_[b])
      continue;
    Bond &bond = g_.bond(b);
    if (bond.in_ring && g_.atom(bond.a).aromatic && g_.atom(bond.b).aromatic)
      bond.order = BondOrder::kAromatic;
  }
  assign_implicit_hydrogens(g_);
  g_.set_source_smiles(std::string(s_));
  return std::move(g_);
}

}  // namespace

std::string_view element_symbol(int z) {
  if (z < 1 || z > kMaxElement)
    return {};
  return kSymbols[static_cast<std::size_t>(z)];
}

int element_number(std::string_view symbol) {
  for (int z = 1; z <= kMaxElement; ++z)
    if (kSymbols[static_cast<std::size_t>(z)] == symbol)
      return z;
  return 0;
}

// ---- MolGraph -------------------------------------------------------------

bool operator==(const Atom &x, const Atom &y) {
  return x.element == y.element && x.aromatic == y.aromatic
         && x.formal_charge == y.formal_charge && x.explicit_h == y.explicit_h
         && x.implicit_h == y.implicit_h && x.bracket == y.bracket
         && x.in_ring == y.in_ring && x.masked == y.masked;
}

bool operator==(const Bond &x, const Bond &y) {
  return x.a == y.a && x.b == y.b && x.order == y.order
         && x.in_ring == y.in_ring;
}

bool operator==(const MolGraph &x, const MolGraph &y) {
  return x.atoms_ == y.atoms_ && x.bonds_ == y.bonds_;
}

std::size_t MolGraph::add_atom(const Atom &atom) {
  if (atom.element < 1 || atom.element > kMaxElement)
    throw Error(ErrorCategory::kData,
                "element " + std::to_string(atom.element) + " out of range");
  atoms_.push_back(atom);
  adjacency_.emplace_back();
  return atoms_.size() - 1;
}

std::size_t MolGraph::add_bond(std::size_t a, std::size_t b, BondOrder order) {
  if (a >= atoms_.size() || b >= atoms_.size())
    throw Error(ErrorCategory::kData, "bond endpoint out of range");
  if (a == b)
    throw Error(ErrorCategory::kData, "self-loop bond");
  if (bond_between(a, b))
    throw Error(ErrorCategory::kData, "duplicate bond");
  const std::size_t id = bonds_.size();
  bonds_.push_back(Bond { a, b, order, false });
  adjacency_[a].push_back({ b, id });
  adjacency_[b].push_back({ a, id });
  return id;
}

std::optional<std::size_t> MolGraph::bond_between(std::size_t a,
                                                  std::size_t b) const {
  for (const Neighbor &n: adjacency_[a])
    if (n.atom == b)
      return n.bond;
  return std::nullopt;
}

MolGraph MolGraph::induced_subgraph(std::span<const std::size_t> atoms) const {
  std::vector<std::size_t> remap(atoms_.size(), SIZE_MAX);
  MolGraph sub;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    remap[atoms[i]] = i;
    sub.add_atom(atoms_[atoms[i]]);
  }
  for (const Bond &b: bonds_) {
    if (remap[b.a] == SIZE_MAX || remap[b.b] == SIZE_MAX)
      continue;
    const std::size_t id = sub.add_bond(remap[b.a], remap[b.b], b.order);
    sub.bonds_[id].in_ring = b.in_ring;
  }
  sub.valence_warning_ = valence_warning_;
  return sub;
}

MolGraph MolGraph::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != atoms_.size())
    throw Error(ErrorCategory::kData, "permutation size mismatch");
  std::vector<std::size_t> inverse(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    inverse[perm[i]] = i;
  MolGraph out;
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    out.add_atom(atoms_[inverse[i]]);
  for (const Bond &b: bonds_) {
    const std::size_t id = out.add_bond(perm[b.a], perm[b.b], b.order);
    out.bonds_[id].in_ring = b.in_ring;
  }
  out.source_ = source_;
  out.valence_warning_ = valence_warning_;
  return out;
}

std::vector<std::size_t> MolGraph::components() const {
  std::vector<bool> none(bonds_.size(), false);
  return components(none);
}

std::vector<std::size_t>
MolGraph::components(const std::vector<bool> &removed_bonds) const {
  std::vector<std::size_t> label(atoms_.size(), SIZE_MAX);
  std::vector<std::size_t> stack;
  std::size_t next = 0;
  for (std::size_t s = 0; s < atoms_.size(); ++s) {
    if (label[s] != SIZE_MAX)
      continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (const Neighbor &n: adjacency_[v]) {
        if (removed_bonds[n.bond] || label[n.atom] != SIZE_MAX)
          continue;
        label[n.atom] = next;
        stack.push_back(n.atom);
      }
    }
    ++next;
  }
  return label;
}

// ---- ring perception ------------------------------------------------------

std::vector<std::size_t> find_bridges(const MolGraph &g) {
  const std::size_t n = g.num_atoms();
  std::vector<std::size_t> disc(n, SIZE_MAX), low(n, 0);
  std::vector<std::size_t> bridges;

  struct Frame {
    std::size_t atom;
    std::size_t parent_bond;
    std::size_t next;
  };
  std::vector<Frame> stack;
  std::size_t time = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (disc[root] != SIZE_MAX)
      continue;
    disc[root] = low[root] = time++;
    stack.push_back({ root, SIZE_MAX, 0 });
    while (!stack.empty()) {
      Frame &f = stack.back();
      auto nbrs = g.neighbors(f.atom);
      if (f.next < nbrs.size()) {
        const Neighbor nb = nbrs[f.next++];
        if (nb.bond == f.parent_bond)
          continue;
        if (disc[nb.atom] == SIZE_MAX) {
          disc[nb.atom] = low[nb.atom] = time++;
          stack.push_back({ nb.atom, nb.bond, 0 });
        } else {
          low[f.atom] = std::min(low[f.atom], disc[nb.atom]);
        }
        continue;
      }
      const Frame done = f;
      stack.pop_back();
      if (!stack.empty()) {
        const std::size_t parent = stack.back().atom;
        low[parent] = std::min(low[parent], low[done.atom]);
        if (low[done.atom] > disc[parent])
          bridges.push_back(done.parent_bond);
      }
    }
  }
  std::sort(bridges.begin(), bridges.end());
  return bridges;
}

void assign_ring_flags(MolGraph &g) {
  std::vector<bool> bridge(g.num_bonds(), false);
  for (std::size_t b: find_bridges(g))
    bridge[b] = true;
  for (std::size_t i = 0; i < g.num_atoms(); ++i)
    g.atom(i).in_ring = false;
  for (std::size_t b = 0; b < g.num_bonds(); ++b) {
    Bond &bond = g.bond(b);
    bond.in_ring = !bridge[b];
    if (bond.in_ring) {
      g.atom(bond.a).in_ring = true;
      g.atom(bond.b).in_ring = true;
    }
  }
}

MolGraph ring_flags(MolGraph g) {
  assign_ring_flags(g);
  return g;
}

void assign_implicit_hydrogens(MolGraph &g) {
  bool warn = false;
  for (std::size_t i = 0; i < g.num_atoms(); ++i) {
    Atom &atom = g.atom(i);
    atom.implicit_h = 0;
    if (atom.bracket)
      continue;
    auto valences = default_valences(atom.element);
    if (valences.empty())
      continue;
    int used = atom.aromatic ? 1 : 0;
    for (const Neighbor &n: g.neighbors(i))
      used += bond_valence(g.bond(n.bond).order);
    auto fit = std::find_if(valences.begin(), valences.end(),
                            [used](int v) { return v >= used; });
    if (fit == valences.end()) {
      warn = true;
      continue;
    }
    atom.implicit_h = *fit - used;
  }
  g.set_valence_warning(warn);
}

MolGraph parse_smiles(std::string_view text) {
  return Parser(text).run();
}

// ---- writer ---------------------------------------------------------------

namespace {

std::string atom_token(const Atom &a) {
  const std::string_view sym = element_symbol(a.element);
  const bool plain = !a.bracket && a.formal_charge == 0 && a.explicit_h == 0
                     && is_organic_subset(a.element)
                     && (!a.aromatic || may_be_aromatic(a.element));
  std::string out;
  if (!plain)
    out += '[';
  if (a.aromatic) {
    for (char c: sym)
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  } else {
    out += sym;
  }
  if (!plain) {
    if (a.explicit_h > 0) {
      out += 'H';
      if (a.explicit_h > 1)
        out += std::to_string(a.explicit_h);
    }
    if (a.formal_charge != 0) {
      out += a.formal_charge > 0 ? '+' : '-';
      const int mag = std::abs(a.formal_charge);
      if (mag > 1)
        out += std::to_string(mag);
    }
    out += ']';
  }
  return out;
}

// Empty when the parser's default reproduces the bond order.
std::string_view bond_token(const MolGraph &g, const Bond &b) {
  const bool aromatic_default =
      b.in_ring && g.atom(b.a).aromatic && g.atom(b.b).aromatic;
  switch (b.order) {
  case BondOrder::kSingle:
    return aromatic_default ? "-" : "";
  case BondOrder::kDouble:
    return "=";
  case BondOrder::kTriple:
    return "#";
  case BondOrder::kAromatic:
    return aromatic_default ? "" : ":";
  }
  return "";
}

std::string ring_label(std::size_t n) {
  if (n < 10)
    return std::string(1, static_cast<char>('0' + n));
  return "%" + std::to_string(n);
}

class Writer {
public:
  Writer(const MolGraph &g, std::span<const std::size_t> rank)
      : g_(g), rank_(rank), visited_(g.num_atoms(), false),
        tree_(g.num_bonds(), false), children_(g.num_atoms()),
        ring_bonds_(g.num_atoms()), digit_(g.num_bonds(), 0) { }

  std::string run() {
    std::vector<std::size_t> order(g_.num_atoms());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return rank_[x] < rank_[y]; });

    std::string out;
    for (std::size_t start: order) {
      if (visited_[start])
        continue;
      classify(start);
      if (!out.empty())
        out += '.';
      emit(start, out);
    }
    return out;
  }

private:
  std::vector<Neighbor> sorted_neighbors(std::size_t v) const {
    auto nb = g_.neighbors(v);
    std::vector<Neighbor> out(nb.begin(), nb.end());
    std::sort(out.begin(), out.end(), [&](const Neighbor &x, const Neighbor &y) {
      return rank_[x.atom] < rank_[y.atom];
    });
    return out;
  }

  // DFS spanning tree; non-tree bonds become ring closures.
  void classify(std::size_t start) {
    struct Frame {
      std::size_t atom;
      std::size_t parent_bond;
      std::vector<Neighbor> nbrs;
      std::size_t next;
    };
    std::vector<bool> seen_bond(g_.num_bonds(), false);
    std::vector<Frame> stack;
    visited_[start] = true;
    stack.push_back({ start, SIZE_MAX, sorted_neighbors(start), 0 });
    while (!stack.empty()) {
      Frame &f = stack.back();
      if (f.next == f.nbrs.size()) {
        stack.pop_back();
        continue;
      }
      const Neighbor nb = f.nbrs[f.next++];
      if (seen_bond[nb.bond])
        continue;
      seen_bond[nb.bond] = true;
      if (visited_[nb.atom]) {
        ring_bonds_[f.atom].push_back(nb);
        ring_bonds_[nb.atom].push_back({ f.atom, nb.bond });
        continue;
      }
      tree_[nb.bond] = true;
      children_[f.atom].push_back(nb);
      visited_[nb.atom] = true;
      const std::size_t child = nb.atom;
      stack.push_back({ child, nb.bond, sorted_neighbors(child), 0 });
    }
  }

  void emit(std::size_t v, std::string &out) {
    out += atom_token(g_.atom(v));
    emitted_.push_back(v);
    is_emitted_.resize(g_.num_atoms(), false);
    is_emitted_[v] = true;

    // closings first (partner already written), then openings
    auto &rings = ring_bonds_[v];
    std::sort(rings.begin(), rings.end(),
              [&](const Neighbor &x, const Neighbor &y) {
                const bool cx = is_emitted_[x.atom], cy = is_emitted_[y.atom];
                if (cx != cy)
                  return cx;
                return rank_[x.atom] < rank_[y.atom];
              });
    for (const Neighbor &nb: rings) {
      if (is_emitted_[nb.atom]) {
        out += ring_label(digit_[nb.bond]);
        free_digits_.push_back(digit_[nb.bond]);
        std::sort(free_digits_.begin(), free_digits_.end());
      } else {
        std::size_t d;
        if (!free_digits_.empty()) {
          d = free_digits_.front();
          free_digits_.erase(free_digits_.begin());
        } else {
          d = ++max_digit_;
        }
        digit_[nb.bond] = d;
        out += bond_token(g_, g_.bond(nb.bond));
        out += ring_label(d);
      }
    }

    const auto &kids = children_[v];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const bool last = k + 1 == kids.size();
      if (!last)
        out += '(';
      out += bond_token(g_, g_.bond(kids[k].bond));
      emit(kids[k].atom, out);
      if (!last)
        out += ')';
    }
  }

  const MolGraph &g_;
  std::span<const std::size_t> rank_;
  std::vector<bool> visited_;
  std::vector<bool> tree_;
  std::vector<std::vector<Neighbor>> children_;
  std::vector<std::vector<Neighbor>> ring_bonds_;
  std::vector<std::size_t> digit_;
  std::vector<std::size_t> free_digits_;
  std::size_t max_digit_ = 0;
  std::vector<std::size_t> emitted_;
  std::vector<bool> is_emitted_;
};

}  // namespace

std::string write_smiles(const MolGraph &g, std::span<const std::size_t> rank) {
  if (rank.size() != g.num_atoms())
    throw Error(ErrorCategory::kData, "write_smiles: rank size mismatch");
  return Writer(g, rank).run();
}

std::string write_smiles(const MolGraph &g) {
  std::vector<std::size_t> rank(g.num_atoms());
  std::iota(rank.begin(), rank.end(), 0);
  return write_smiles(g, rank);
}

}  // namespace molcpt
