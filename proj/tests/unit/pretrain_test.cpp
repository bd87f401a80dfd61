//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/pretrain.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "molcpt/error.h"
#include "molcpt/rng.h"
#include "support/random_molecules.h"

namespace molcpt {
namespace {

using nd::Tape;
using nd::Tensor;
using nd::Var;

constexpr AugmentKind kAllKinds[] { AugmentKind::kNodeDrop, AugmentKind::kEdgeDrop,
                                    AugmentKind::kAttrMask };

std::size_t count_masked(const MolGraph &g) {
  std::size_t n = 0;
  for (const Atom &a: g.atoms())
    n += a.masked ? 1 : 0;
  return n;
}

EncoderParams tiny_encoder(std::uint64_t seed, std::size_t layers = 2, std::size_t dim = 8) {
  Rng rng(seed);
  return EncoderParams::init({ layers, dim }, rng);
}

TEST(AugmentTest, ZeroRatioIsIdentity) {
  const MolGraph g = parse_smiles("c1ccccc1CC(=O)N");
  for (AugmentKind kind: kAllKinds)
    EXPECT_EQ(augment(g, kind, 0.0, 5), g) << augment_kind_name(kind);
}

TEST(AugmentTest, NodeDropOnPathKeepsLargestComponent) {
  // Dropping 2 of 4 path atoms leaves a 2-atom path for 3 of the 6 pairs
  // ({0,1}, {2,3}, {0,3}) and two isolated atoms otherwise.
  const MolGraph path = parse_smiles("CCCC");
  std::size_t twos = 0;
  const std::size_t trials = 4000;
  for (std::size_t seed = 0; seed < trials; ++seed) {
    const MolGraph out = augment(path, AugmentKind::kNodeDrop, 0.5, seed);
    ASSERT_TRUE(out.num_atoms() == 1 || out.num_atoms() == 2);
    if (out.num_atoms() == 2) {
      ++twos;
      EXPECT_EQ(out.num_bonds(), 1);
    }
  }
  EXPECT_NEAR(static_cast<double>(twos) / trials, 0.5, 0.03);
}

TEST(AugmentTest, NodeDropResultIsConnectedAndNeverEmpty) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const MolGraph g = parse_smiles(testing::random_smiles(rng));
    const MolGraph out = augment(g, AugmentKind::kNodeDrop, 0.9, rng.next());
    ASSERT_GE(out.num_atoms(), 1);
    ASSERT_LE(out.num_atoms(), g.num_atoms() - ratio_count(0.9, g.num_atoms())
                                   + (ratio_count(0.9, g.num_atoms()) >= g.num_atoms()));
    for (std::size_t c: out.components())
      ASSERT_EQ(c, 0);
  }
  EXPECT_EQ(augment(parse_smiles("C"), AugmentKind::kNodeDrop, 0.99, 3).num_atoms(), 1);
}

TEST(AugmentTest, EdgeDropRemovesAcyclicBondsFirst) {
  const MolGraph g = parse_smiles("c1ccccc1CC");  // 6 ring bonds, 2 acyclic
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MolGraph two = augment(g, AugmentKind::kEdgeDrop, 0.25, seed);
    EXPECT_EQ(two.num_atoms(), 8);
    ASSERT_EQ(two.num_bonds(), 6);
    for (const Bond &b: two.bonds())
      EXPECT_LT(std::max(b.a, b.b), 6);
    const MolGraph four = augment(g, AugmentKind::kEdgeDrop, 0.5, seed);
    EXPECT_EQ(four.num_bonds(), 4);
    EXPECT_FALSE(four.bond_between(5, 6).has_value());
    EXPECT_FALSE(four.bond_between(6, 7).has_value());
  }
}

TEST(AugmentTest, AttrMaskUsesFloorOfRatio) {
  const MolGraph g = parse_smiles("CCCO");
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    EXPECT_EQ(count_masked(augment(g, AugmentKind::kAttrMask, 0.25, seed)), 1);
  EXPECT_EQ(count_masked(augment(g, AugmentKind::kAttrMask, 0.74, 1)), 2);
}

TEST(AugmentTest, DeterministicGivenSeed) {
  const MolGraph g = parse_smiles("CC(C)c1ccc(O)cc1CCN");
  for (AugmentKind kind: kAllKinds)
    EXPECT_EQ(augment(g, kind, 0.3, 42), augment(g, kind, 0.3, 42));
}

TEST(AugmentTest, RejectsRatioOutsideUnitInterval) {
  const MolGraph g = parse_smiles("CC");
  EXPECT_THROW(augment(g, AugmentKind::kNodeDrop, 1.0, 0), Error);
  EXPECT_THROW(augment(g, AugmentKind::kEdgeDrop, -0.1, 0), Error);
  EXPECT_THROW(augment(MolGraph(), AugmentKind::kAttrMask, 0.1, 0), Error);
}

TEST(NtXentTest, OrthogonalPairClosedForm) {
  // Each anchor sees logits (1/tau, 0), so CE = log(1 + exp(-1/tau)).
  for (double tau: { 0.1, 0.5, 1.0, 3.0 }) {
    Tape tape;
    Tensor z({ 2, 2 }, { 1, 0, 0, 1 });
    const double loss = ntxent_loss(tape.constant(z), tape.constant(z), tau).value().item();
    EXPECT_NEAR(loss, std::log1p(std::exp(-1.0 / tau)), 1e-12) << tau;
  }
}

TEST(NtXentTest, LargeTemperatureApproachesLogCandidates) {
  Rng rng(2);
  for (std::size_t n: { 2, 5, 16 }) {
    Tensor a({ n, 6 }), b({ n, 6 });
    for (double &x: a.values())
      x = rng.uniform(-1, 1);
    for (double &x: b.values())
      x = rng.uniform(-1, 1);
    Tape tape;
    const double loss = ntxent_loss(tape.constant(a), tape.constant(b), 1e6).value().item();
    EXPECT_NEAR(loss, std::log(static_cast<double>(n)), 1e-3);
  }
}

TEST(NtXentTest, NonNegativeAndBatchOrderInvariant) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.index(8);
    Tensor a({ n, 4 }), b({ n, 4 });
    for (double &x: a.values())
      x = rng.uniform(-1, 1);
    for (double &x: b.values())
      x = rng.uniform(-1, 1);
    const std::vector<std::size_t> perm = testing::random_permutation(rng, n);
    Tensor pa({ n, 4 }), pb({ n, 4 });
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        pa(perm[i], j) = a(i, j);
        pb(perm[i], j) = b(i, j);
      }
    Tape tape;
    const double loss = ntxent_loss(tape.constant(a), tape.constant(b), 0.2).value().item();
    const double permuted =
        ntxent_loss(tape.constant(pa), tape.constant(pb), 0.2).value().item();
    EXPECT_GE(loss, 0.0);
    EXPECT_DOUBLE_EQ(loss, permuted);
  }
}

TEST(NtXentTest, GradientCheck) {
  Rng rng(4);
  Tensor other({ 3, 4 });
  for (double &x: other.values())
    x = rng.uniform(-1, 1);
  Tensor x({ 3, 4 });
  for (double &v: x.values())
    v = rng.uniform(-1, 1);
  auto f = [&](Tape &tape, Var z) { return ntxent_loss(z, tape.constant(other), 0.5); };
  EXPECT_LE(nd::grad_check(f, x), 1e-4);
}

TEST(NtXentTest, RejectsDegenerateInput) {
  Tape tape;
  Var one = tape.constant(Tensor({ 1, 3 }, { 1, 2, 3 }));
  EXPECT_THROW(ntxent_loss(one, one, 0.1), Error);
  Var two = tape.constant(Tensor({ 2, 3 }, { 1, 2, 3, 4, 5, 6 }));
  EXPECT_THROW(ntxent_loss(two, two, 0.0), Error);
}

TEST(AttrMaskTest, UniformHeadGivesLogClassCount) {
  Rng rng(5);
  EncoderParams p = tiny_encoder(5);
  OutputHead head = OutputHead::init(PretrainTask::kAttrMask, 8, rng);
  for (double &w: head.weights[0].value.values())
    w = 0.0;
  Tape tape;
  const double loss =
      attrmask_task(tape, parse_smiles("c1ccccc1O"), 0.15, 9, p, head).value().item();
  EXPECT_NEAR(loss, std::log(static_cast<double>(kElementClasses)), 1e-12);
}

TEST(AttrMaskTest, PerfectHeadDrivesLossToZero) {
  // With no layers a masked atom's row is the MASK row; the head maps it to
  // a logit of 30 for carbon, and every atom of the molecule is carbon.
  Rng rng(6);
  EncoderParams p = EncoderParams::init({ 0, 2 }, rng);
  for (std::size_t j = 0; j < 2; ++j)
    p.element.value(kMaskRow, j) = j == 0 ? 1.0 : 0.0;
  OutputHead head = OutputHead::init(PretrainTask::kAttrMask, 2, rng);
  for (double &w: head.weights[0].value.values())
    w = 0.0;
  head.weights[0].value(0, 6) = 30.0;
  Tape tape;
  const double loss = attrmask_task(tape, parse_smiles("CCCC"), 0.5, 1, p, head).value().item();
  EXPECT_LE(loss, 1e-9);
}

TEST(AttrMaskTest, OneMaskedAtomMatchesForwardOracle) {
  // floor(0.34 * 3) = 1 atom is masked; the loss must equal the CE of the
  // head's logits for one of the three single-atom maskings.
  Rng rng(7);
  const EncoderParams p = tiny_encoder(7);
  const OutputHead head = OutputHead::init(PretrainTask::kAttrMask, 8, rng);
  const MolGraph g = parse_smiles("CCO");
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Tape tape;
    const double loss = attrmask_task(tape, g, 0.34, seed, p, head).value().item();
    int matches = 0;
    for (std::size_t a = 0; a < 3; ++a) {
      MolGraph m = g;
      m.atom(a).masked = true;
      Tape t2;
      const Tensor nodes = encode_graph(t2, m, p).nodes.value();
      std::vector<double> logits(kElementClasses, 0.0);
      for (std::size_t c = 0; c < kElementClasses; ++c)
        for (std::size_t j = 0; j < 8; ++j)
          logits[c] += nodes(a, j) * head.weights[0].value(j, c);
      double mx = logits[0];
      for (double l: logits)
        mx = std::max(mx, l);
      double z = 0.0;
      for (double l: logits)
        z += std::exp(l - mx);
      const double ce = -(logits[static_cast<std::size_t>(g.atom(a).element)] - mx - std::log(z));
      matches += std::abs(ce - loss) <= 1e-12 * (1 + ce) ? 1 : 0;
    }
    EXPECT_GE(matches, 1) << "seed " << seed;
  }
}

TEST(AttrMaskTest, GradientCheck) {
  Rng rng(8);
  EncoderParams p = tiny_encoder(8, 2, 4);
  OutputHead head = OutputHead::init(PretrainTask::kAttrMask, 4, rng);
  const MolGraph g = parse_smiles("CC(=O)N");
  auto f = [&](Tape &tape) { return attrmask_task(tape, g, 0.5, 3, p, head); };
  std::vector<nd::Parameter *> params = p.parameters();
  for (nd::Parameter *q: head.parameters())
    params.push_back(q);
  EXPECT_LE(nd::grad_check(f, params), 1e-4);
}

TEST(OutputHeadTest, DimensionsFollowTheTask) {
  Rng rng(9);
  EXPECT_EQ(OutputHead::init(PretrainTask::kContrastive, 16, rng).output_dim(), 16);
  EXPECT_EQ(OutputHead::init(PretrainTask::kAttrMask, 16, rng).output_dim(), kElementClasses);
}

TEST(PretrainRunTest, ZeroEpochsLeavesParametersUnchanged) {
  Rng rng(10);
  EncoderParams p = tiny_encoder(10);
  OutputHead head = OutputHead::init(PretrainTask::kContrastive, 8, rng);
  const EncoderParams before = p;
  PretrainConfig config;
  config.epochs = 0;
  const std::vector<MolGraph> corpus { parse_smiles("CCO"), parse_smiles("CCN") };
  EXPECT_TRUE(pretrain_epochs(corpus, config, p, head).empty());
  for (std::size_t i = 0; i < p.parameters().size(); ++i)
    EXPECT_EQ(p.parameters()[i]->value, before.parameters()[i]->value);
}

TEST(PretrainRunTest, ContrastiveLossDecreases) {
  Rng rng(11);
  std::vector<MolGraph> corpus;
  for (int i = 0; i < 50; ++i)
    corpus.push_back(parse_smiles(testing::random_smiles(rng)));
  PretrainConfig config;
  config.encoder = { 2, 16 };
  config.epochs = 20;
  config.batch_size = 16;
  config.seed = 1;
  const PretrainResult r = pretrain_run(corpus, config);
  ASSERT_EQ(r.epoch_losses.size(), 20);
  EXPECT_LT(r.epoch_losses.back(), r.epoch_losses.front());
}

TEST(PretrainRunTest, MaskingMemorizesOneMolecule) {
  const std::vector<MolGraph> corpus(8, parse_smiles("CC(=O)N"));
  PretrainConfig config;
  config.task = PretrainTask::kAttrMask;
  config.encoder = { 3, 16 };
  config.epochs = 200;
  config.batch_size = 8;
  config.lr = 1e-2;
  config.seed = 2;
  const PretrainResult r = pretrain_run(corpus, config);
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    EXPECT_EQ(attrmask_accuracy(corpus, 0.15, seed, r.encoder, r.head), 1.0);
}

TEST(PretrainRunTest, DeterministicGivenSeed) {
  Rng rng(12);
  std::vector<MolGraph> corpus;
  for (int i = 0; i < 12; ++i)
    corpus.push_back(parse_smiles(testing::random_smiles(rng)));
  PretrainConfig config;
  config.encoder = { 2, 8 };
  config.epochs = 3;
  config.batch_size = 5;
  config.seed = 3;
  const PretrainResult a = pretrain_run(corpus, config);
  const PretrainResult b = pretrain_run(corpus, config);
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  EXPECT_EQ(a.encoder.w2.back().value, b.encoder.w2.back().value);
}

TEST(PretrainRunTest, RejectsEmptyCorpus) {
  PretrainConfig config;
  EXPECT_THROW(pretrain_run({}, config), Error);
}

}  // namespace
}  // namespace molcpt
