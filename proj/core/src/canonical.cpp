//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <numeric>
#include <tuple>
#include <utility>
#include <vector>

#include "molcpt/fragment.h"

namespace molcpt {

namespace {

// Colors follow the partition-backtracking convention: an atom's color is
// the index of the first position of its cell in the ordered partition, so
// a partition is discrete exactly when the colors form a permutation.
using Coloring = std::vector<std::size_t>;

template <class Key>
Coloring rank_by(const std::vector<Key> &keys) {
  const std::size_t n = keys.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return keys[x] < keys[y]; });
  Coloring color(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && keys[order[i]] == keys[order[i - 1]])
      color[order[i]] = color[order[i - 1]];
    else
      color[order[i]] = i;
  }
  return color;
}

std::size_t cell_count(const Coloring &c) {
  std::vector<bool> seen(c.size(), false);
  std::size_t n = 0;
  for (std::size_t x: c)
    if (!seen[x]) {
      seen[x] = true;
      ++n;
    }
  return n;
}

Coloring initial_coloring(const MolGraph &g) {
  using Key = std::tuple<AtomLabel, std::vector<int>>;
  std::vector<Key> keys;
  keys.reserve(g.num_atoms());
  for (std::size_t i = 0; i < g.num_atoms(); ++i) {
    std::vector<int> orders;
    for (const Neighbor &n: g.neighbors(i))
      orders.push_back(static_cast<int>(g.bond(n.bond).order));
    std::sort(orders.begin(), orders.end());
    keys.emplace_back(atom_label(g.atom(i)), std::move(orders));
  }
  return rank_by(keys);
}

// Splits cells by the multiset of (bond order, neighbor color) until stable.
void refine(const MolGraph &g, Coloring &color) {
  using Signature = std::pair<std::size_t, std::vector<std::size_t>>;
  std::size_t cells = cell_count(color);
  for (;;) {
    std::vector<Signature> sig(g.num_atoms());
    for (std::size_t i = 0; i < g.num_atoms(); ++i) {
      sig[i].first = color[i];
      for (const Neighbor &n: g.neighbors(i))
        sig[i].second.push_back(
            color[n.atom] * 8 + static_cast<std::size_t>(g.bond(n.bond).order));
      std::sort(sig[i].second.begin(), sig[i].second.end());
    }
    Coloring next = rank_by(sig);
    const std::size_t next_cells = cell_count(next);
    color = std::move(next);
    if (next_cells == cells)
      return;
    cells = next_cells;
  }
}

class Search {
public:
  explicit Search(const MolGraph &g): g_(g) { }

  void run(Coloring color) {
    refine(g_, color);
    descend(std::move(color));
  }

  const Coloring &best_ranks() const { return best_; }
  const std::string &best_string() const { return best_str_; }

private:
  void descend(Coloring color) {
    const std::size_t n = color.size();
    // target: smallest non-singleton cell (by position)
    std::vector<std::size_t> size(n, 0);
    for (std::size_t c: color)
      ++size[c];
    std::size_t target = n;
    for (std::size_t c = 0; c < n; ++c)
      if (size[c] > 1) {
        target = c;
        break;
      }

    if (target == n) {
      std::string s = write_smiles(g_, color);
      if (!found_ || s < best_str_) {
        best_str_ = std::move(s);
        best_ = color;
        found_ = true;
      }
      return;
    }

    for (std::size_t v = 0; v < n; ++v) {
      if (color[v] != target)
        continue;
      Coloring child = color;
      for (std::size_t u = 0; u < n; ++u)
        if (u != v && child[u] == target)
          child[u] = target + 1;
      refine(g_, child);
      descend(std::move(child));
    }
  }

  const MolGraph &g_;
  Coloring best_;
  std::string best_str_;
  bool found_ = false;
};

MolGraph with_fresh_ring_flags(const MolGraph &g) {
  MolGraph copy = g;
  assign_ring_flags(copy);
  return copy;
}

}  // namespace

std::vector<std::size_t> canonical_ranks(const MolGraph &g) {
  if (g.empty())
    return {};
  const MolGraph h = with_fresh_ring_flags(g);
  Search search(h);
  search.run(initial_coloring(h));
  return search.best_ranks();
}

std::string canonical_key(const MolGraph &g) {
  if (g.empty())
    return std::string(kEmptyMotifKey);
  const MolGraph h = with_fresh_ring_flags(g);
  Search search(h);
  search.run(initial_coloring(h));
  return search.best_string();
}

}  // namespace molcpt
