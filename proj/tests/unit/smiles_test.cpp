//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/smiles.h"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "molcpt/error.h"
#include "molcpt/rng.h"
#include "support/oracles.h"
#include "support/random_molecules.h"

namespace molcpt {
namespace {

std::size_t count_ring_bonds(const MolGraph &g) {
  return static_cast<std::size_t>(std::count_if(
      g.bonds().begin(), g.bonds().end(), [](const Bond &b) { return b.in_ring; }));
}

TEST(ElementTest, SymbolRoundTrip) {
  for (int z = 1; z <= kMaxElement; ++z)
    EXPECT_EQ(element_number(element_symbol(z)), z) << z;
  EXPECT_EQ(element_number("Xx"), 0);
  EXPECT_TRUE(element_symbol(0).empty());
  EXPECT_EQ(element_number("Cl"), 17);
}

TEST(ParseTest, Ethanol) {
  MolGraph g = parse_smiles("CCO");
  ASSERT_EQ(g.num_atoms(), 3);
  ASSERT_EQ(g.num_bonds(), 2);
  EXPECT_EQ(g.atom(0).element, 6);
  EXPECT_EQ(g.atom(1).element, 6);
  EXPECT_EQ(g.atom(2).element, 8);
  for (const Bond &b: g.bonds()) {
    EXPECT_EQ(b.order, BondOrder::kSingle);
    EXPECT_FALSE(b.in_ring);
  }
  EXPECT_EQ(g.atom(0).implicit_h, 3);
  EXPECT_EQ(g.atom(1).implicit_h, 2);
  EXPECT_EQ(g.atom(2).implicit_h, 1);
  EXPECT_EQ(g.source_smiles(), "CCO");
}

TEST(ParseTest, Benzene) {
  MolGraph g = parse_smiles("c1ccccc1");
  ASSERT_EQ(g.num_atoms(), 6);
  ASSERT_EQ(g.num_bonds(), 6);
  for (const Atom &a: g.atoms()) {
    EXPECT_EQ(a.element, 6);
    EXPECT_TRUE(a.aromatic);
    EXPECT_TRUE(a.in_ring);
    EXPECT_EQ(a.implicit_h, 1);
  }
  for (const Bond &b: g.bonds()) {
    EXPECT_EQ(b.order, BondOrder::kAromatic);
    EXPECT_TRUE(b.in_ring);
  }
}

TEST(ParseTest, MethylAcetateBondOrders) {
  // Reference walk: C0-C1, C1=O2 (branch), C1-O3, O3-C4.
  MolGraph g = parse_smiles("CC(=O)OC");
  ASSERT_EQ(g.num_atoms(), 5);
  ASSERT_EQ(g.num_bonds(), 4);
  const std::vector<std::pair<std::size_t, std::size_t>> ends {
    { 0, 1 }, { 1, 2 }, { 1, 3 }, { 3, 4 }
  };
  const std::vector<BondOrder> orders { BondOrder::kSingle, BondOrder::kDouble,
                                        BondOrder::kSingle, BondOrder::kSingle };
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(g.bond(i).a, ends[i].first);
    EXPECT_EQ(g.bond(i).b, ends[i].second);
    EXPECT_EQ(g.bond(i).order, orders[i]);
    EXPECT_FALSE(g.bond(i).in_ring);
  }
}

TEST(ParseTest, BracketAtoms) {
  MolGraph g = parse_smiles("[NH4+].[O-]C(=O)C.[13CH3]Cl.[nH]1cccc1");
  EXPECT_EQ(g.atom(0).element, 7);
  EXPECT_EQ(g.atom(0).formal_charge, 1);
  EXPECT_EQ(g.atom(0).explicit_h, 4);
  EXPECT_TRUE(g.atom(0).bracket);
  EXPECT_EQ(g.atom(1).formal_charge, -1);
  EXPECT_EQ(g.atom(1).explicit_h, 0);
  EXPECT_EQ(g.atom(5).element, 6);
  EXPECT_EQ(g.atom(5).explicit_h, 3);
  EXPECT_EQ(g.atom(7).element, 7);
  EXPECT_TRUE(g.atom(7).aromatic);
  EXPECT_EQ(g.atom(7).explicit_h, 1);
  EXPECT_EQ(g.components(), (std::vector<std::size_t> { 0, 1, 1, 1, 1, 2, 2, 3, 3, 3, 3, 3 }));
}

TEST(ParseTest, ChargeForms) {
  EXPECT_EQ(parse_smiles("[Fe+++]").atom(0).formal_charge, 3);
  EXPECT_EQ(parse_smiles("[Fe+3]").atom(0).formal_charge, 3);
  EXPECT_EQ(parse_smiles("[O--]").atom(0).formal_charge, -2);
}

TEST(ParseTest, StereoDropped) {
  MolGraph a = parse_smiles("F/C=C/F");
  MolGraph b = parse_smiles("FC=CF");
  EXPECT_EQ(a, b);
  MolGraph c = parse_smiles("N[C@@H](C)C(=O)O");
  MolGraph d = parse_smiles("N[CH](C)C(=O)O");
  EXPECT_EQ(c, d);
}

TEST(ParseTest, PercentRingClosures) {
  MolGraph a = parse_smiles("C%12CCCCC%12");
  MolGraph b = parse_smiles("C1CCCCC1");
  EXPECT_EQ(a, b);
}

TEST(ParseTest, ExplicitBondOverridesAromaticDefault) {
  // Biphenyl: the link between rings is acyclic and stays single.
  MolGraph g = parse_smiles("c1ccccc1-c1ccccc1");
  EXPECT_EQ(g.bond(6).order, BondOrder::kSingle);
  MolGraph h = parse_smiles("c1ccccc1c1ccccc1");
  EXPECT_EQ(h.bond(*h.bond_between(5, 6)).order, BondOrder::kSingle);
}

TEST(ParseTest, ValenceWarningAcceptsInput) {
  MolGraph g = parse_smiles("C(C)(C)(C)(C)C");
  EXPECT_TRUE(g.valence_warning());
  EXPECT_EQ(g.atom(0).implicit_h, 0);
  EXPECT_FALSE(parse_smiles("CC(C)(C)C").valence_warning());
}

TEST(ParseTest, ImplicitHydrogenValences) {
  EXPECT_EQ(parse_smiles("CS(=O)(=O)C").atom(1).implicit_h, 0);
  EXPECT_EQ(parse_smiles("CSC").atom(1).implicit_h, 0);
  EXPECT_EQ(parse_smiles("S").atom(0).implicit_h, 2);
  EXPECT_EQ(parse_smiles("N").atom(0).implicit_h, 3);
  EXPECT_EQ(parse_smiles("B").atom(0).implicit_h, 3);
  EXPECT_EQ(parse_smiles("Cl").atom(0).implicit_h, 1);
  EXPECT_EQ(parse_smiles("P(Cl)(Cl)(Cl)(Cl)Cl").atom(0).implicit_h, 0);
  EXPECT_EQ(parse_smiles("c1ccncc1").atom(3).implicit_h, 0);
}

TEST(ParseTest, WhitespaceTerminates) {
  EXPECT_EQ(parse_smiles("CCO ethanol").num_atoms(), 3);
}

struct BadInput {
  const char *text;
  std::size_t position;
};

class ParseErrorTest: public ::testing::TestWithParam<BadInput> { };

TEST_P(ParseErrorTest, ReportsPosition) {
  const BadInput in = GetParam();
  try {
    parse_smiles(in.text);
    FAIL() << "accepted " << in.text;
  } catch (const ParseError &e) {
    EXPECT_EQ(e.position(), in.position) << in.text << ": " << e.what();
    EXPECT_EQ(e.category(), ErrorCategory::kParse);
  }
}

INSTANTIATE_TEST_SUITE_P(
    Inputs, ParseErrorTest,
    ::testing::Values(BadInput { "", 0 }, BadInput { "C1CC", 1 },
                      BadInput { "CC(C", 2 }, BadInput { "CC)C", 2 },
                      BadInput { "CXC", 1 }, BadInput { "C[Zz]", 2 },
                      BadInput { "C=", 1 }, BadInput { "C==C", 2 },
                      BadInput { "(C)", 0 }, BadInput { "1CC", 0 },
                      BadInput { "C[CH3", 1 }, BadInput { "C%1C", 1 },
                      BadInput { "C11", 2 }));

TEST(RingFlagsTest, PathHasNoRings) {
  MolGraph g = parse_smiles("CCCC");
  EXPECT_EQ(count_ring_bonds(g), 0);
  EXPECT_EQ(find_bridges(g).size(), 3);
}

TEST(RingFlagsTest, Triangle) {
  MolGraph g = parse_smiles("C1CC1");
  EXPECT_EQ(count_ring_bonds(g), 3);
  for (const Atom &a: g.atoms())
    EXPECT_TRUE(a.in_ring);
}

TEST(RingFlagsTest, CyclopropylMethyl) {
  MolGraph g = parse_smiles("C1CC1C");
  std::vector<bool> oracle = testing::bridges_by_deletion(g);
  EXPECT_EQ(std::count(oracle.begin(), oracle.end(), true), 1);
  EXPECT_EQ(count_ring_bonds(g), 3);
  EXPECT_EQ(find_bridges(g).size(), 1);
  EXPECT_FALSE(g.atom(3).in_ring);
}

TEST(RingFlagsTest, RecomputesOnCopy) {
  MolGraph g = parse_smiles("C1CC1C");
  for (std::size_t b = 0; b < g.num_bonds(); ++b)
    g.bond(b).in_ring = false;
  MolGraph h = ring_flags(g);
  EXPECT_EQ(count_ring_bonds(h), 3);
  EXPECT_EQ(count_ring_bonds(g), 0);
}

TEST(RingFlagsTest, MatchesDeletionOracleOnRandomGraphs) {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.index(30);
    MolGraph g = testing::random_graph(rng, n, rng.index(n / 3 + 1));
    std::vector<bool> bridge = testing::bridges_by_deletion(g);
    std::size_t bridges = 0;
    for (std::size_t b = 0; b < g.num_bonds(); ++b) {
      EXPECT_EQ(g.bond(b).in_ring, !bridge[b]);
      bridges += bridge[b];
    }
    EXPECT_EQ(bridges + count_ring_bonds(g), g.num_bonds());
    EXPECT_EQ(find_bridges(g).size(), bridges);
  }
}

TEST(RingFlagsTest, MatchesCycleEnumerationOnRandomSmiles) {
  Rng rng(202);
  int checked = 0;
  while (checked < 300) {
    const std::string text = testing::random_smiles(rng, 5);
    MolGraph g = parse_smiles(text);
    if (g.num_atoms() > 12)
      continue;
    ++checked;
    std::vector<bool> cyc = testing::ring_bonds_by_enumeration(g);
    for (std::size_t b = 0; b < g.num_bonds(); ++b)
      EXPECT_EQ(g.bond(b).in_ring, cyc[b]) << text << " bond " << b;
    for (std::size_t a = 0; a < g.num_atoms(); ++a) {
      bool touches = false;
      for (const Neighbor &nb: g.neighbors(a))
        touches = touches || cyc[nb.bond];
      EXPECT_EQ(g.atom(a).in_ring, touches) << text << " atom " << a;
    }
  }
}

TEST(ParsePropertyTest, ParseTwiceIdentical) {
  Rng rng(303);
  for (int trial = 0; trial < 500; ++trial) {
    const std::string text = testing::random_smiles(rng);
    EXPECT_EQ(parse_smiles(text), parse_smiles(text)) << text;
  }
}

TEST(ParsePropertyTest, AdjacencyConsistentWithBonds) {
  Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    MolGraph g = parse_smiles(testing::random_smiles(rng));
    std::size_t half_edges = 0;
    for (std::size_t a = 0; a < g.num_atoms(); ++a) {
      for (const Neighbor &nb: g.neighbors(a)) {
        const Bond &b = g.bond(nb.bond);
        EXPECT_TRUE((b.a == a && b.b == nb.atom) || (b.b == a && b.a == nb.atom));
        ++half_edges;
      }
    }
    EXPECT_EQ(half_edges, 2 * g.num_bonds());
  }
}

TEST(WriterTest, RoundTripPreservesGraph) {
  Rng rng(505);
  for (int trial = 0; trial < 300; ++trial) {
    const std::string text = testing::random_smiles(rng);
    MolGraph g = parse_smiles(text);
    std::vector<std::size_t> rank = testing::random_permutation(rng, g.num_atoms());
    MolGraph h = parse_smiles(write_smiles(g, rank));
    ASSERT_EQ(h.num_atoms(), g.num_atoms()) << text;
    ASSERT_EQ(h.num_bonds(), g.num_bonds()) << text;
    EXPECT_TRUE(testing::isomorphic_brute_force(g, h) || g.num_atoms() > 10)
        << text << " -> " << write_smiles(g, rank);
  }
}

TEST(WriterTest, BracketAndChargeSurvive) {
  MolGraph g = parse_smiles("[NH4+].[O-]C(=O)C");
  MolGraph h = parse_smiles(write_smiles(g));
  EXPECT_EQ(h.atom(0).formal_charge, 1);
  EXPECT_EQ(h.atom(0).explicit_h, 4);
  EXPECT_EQ(h.atom(1).formal_charge, -1);
}

TEST(GraphTest, AddBondValidation) {
  MolGraph g;
  g.add_atom({});
  g.add_atom({});
  EXPECT_THROW(g.add_bond(0, 0, BondOrder::kSingle), Error);
  EXPECT_THROW(g.add_bond(0, 5, BondOrder::kSingle), Error);
  g.add_bond(0, 1, BondOrder::kSingle);
  EXPECT_THROW(g.add_bond(1, 0, BondOrder::kDouble), Error);
}

TEST(GraphTest, PermutedMovesAtoms) {
  MolGraph g = parse_smiles("CCO");
  std::vector<std::size_t> perm { 2, 0, 1 };
  MolGraph h = g.permuted(perm);
  EXPECT_EQ(h.atom(2).implicit_h, 3);
  EXPECT_EQ(h.atom(0).implicit_h, 2);
  EXPECT_EQ(h.atom(1).element, 8);
  EXPECT_TRUE(h.bond_between(2, 0).has_value());
  EXPECT_TRUE(h.bond_between(0, 1).has_value());
  EXPECT_FALSE(h.bond_between(2, 1).has_value());
}

TEST(GraphTest, ComponentsAgreeWithUnionFind) {
  Rng rng(606);
  for (int trial = 0; trial < 200; ++trial) {
    MolGraph g = parse_smiles(testing::random_smiles(rng));
    std::vector<bool> removed(g.num_bonds());
    for (std::size_t b = 0; b < g.num_bonds(); ++b)
      removed[b] = rng.uniform() < 0.3;
    EXPECT_EQ(g.components(removed), testing::components_union_find(g, removed));
  }
}

}  // namespace
}  // namespace molcpt
