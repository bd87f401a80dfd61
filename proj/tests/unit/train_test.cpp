//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/train.h"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "molcpt/error.h"
#include "molcpt/rng.h"
#include "molcpt/split.h"
#include "molcpt/synthetic.h"
#include "support/oracles.h"

namespace molcpt {
namespace {

struct Fixture {
  TaskDataset ds;
  PromptModel pretrained;
  MotifVocabulary vocab;
};

Fixture make_fixture(std::size_t molecules = 60) {
  Fixture f;
  f.ds = planted_dataset({ .molecules = molecules, .seed = 3 });
  f.ds.split = scaffold_split(f.ds);
  Rng rng(11);
  f.pretrained.encoder = EncoderParams::init({ 2, 8 }, rng);
  f.pretrained.head = OutputHead::init(PretrainTask::kContrastive, 8, rng);
  std::vector<MolGraph> corpus;
  for (std::size_t i: f.ds.split.train)
    corpus.push_back(f.ds.records[i].graph);
  f.vocab = build_vocabulary(corpus, RuleSet::kSimple, 3);
  return f;
}

RunConfig small_config(Regime regime) {
  RunConfig c;
  c.regime = regime;
  c.epochs = 3;
  c.batch_size = 16;
  c.lr = 1e-2;
  c.seeds = { 0, 1 };
  c.threads = 1;
  return c;
}

std::vector<const nd::Parameter *> encoder_params(const PromptModel &m) {
  return static_cast<const EncoderParams &>(m.encoder).parameters();
}

TEST(RegimeTest, NamesRoundTrip) {
  for (Regime r: { Regime::kProbe, Regime::kMolcpt, Regime::kFrozen, Regime::kZeroshot })
    EXPECT_EQ(parse_regime(regime_name(r)), r);
  EXPECT_THROW(parse_regime("tuned"), Error);
}

TEST(FinetuneTest, ZeroshotIsRepeatableAndHasOnlyEpochZero) {
  const Fixture f = make_fixture();
  const RunConfig c = small_config(Regime::kZeroshot);
  const RunResult a = finetune_run(f.ds, f.pretrained, f.vocab, c);
  const RunResult b = finetune_run(f.ds, f.pretrained, f.vocab, c);
  EXPECT_EQ(format_metrics(a.rows), format_metrics(b.rows));
  for (const MetricRow &r: a.rows)
    EXPECT_TRUE(r.epoch == "0" || r.epoch == "best" || r.epoch == "mean" || r.epoch == "std");
  for (const SeedResult &s: a.seeds)
    EXPECT_EQ(s.best_epoch, 0);
}

TEST(FinetuneTest, FixedRegimesLeaveEncoderBitIdentical) {
  const Fixture f = make_fixture();
  for (Regime r: { Regime::kFrozen, Regime::kZeroshot, Regime::kProbe }) {
    RunConfig c = small_config(r);
    c.probe_frozen = true;
    const RunResult res = finetune_run(f.ds, f.pretrained, f.vocab, c);
    const auto got = encoder_params(res.model);
    const auto want = encoder_params(f.pretrained);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i)
      EXPECT_EQ(got[i]->value, want[i]->value) << regime_name(r) << " " << got[i]->name;
    if (r != Regime::kProbe)
      for (std::size_t i = 0; i < f.pretrained.head.weights.size(); ++i)
        EXPECT_EQ(res.model.head.weights[i].value, f.pretrained.head.weights[i].value);
  }
}

TEST(FinetuneTest, MolcptUpdatesEncoder) {
  const Fixture f = make_fixture(100);
  const RunResult res = finetune_run(f.ds, f.pretrained, f.vocab, small_config(Regime::kMolcpt));
  std::size_t trained = 0;
  for (const SeedResult &s: res.seeds)
    trained += s.best_epoch > 0 ? 1 : 0;
  ASSERT_GT(trained, 0);
  EXPECT_NE(res.model.encoder.w1[0].value, f.pretrained.encoder.w1[0].value);
  EXPECT_TRUE(res.model.has_prompt);
  EXPECT_EQ(res.model.table.size(), f.vocab.size());
}

TEST(FinetuneTest, SeededRunsAreByteIdentical) {
  const Fixture f = make_fixture();
  for (Regime r: { Regime::kMolcpt, Regime::kProbe }) {
    const RunConfig c = small_config(r);
    EXPECT_EQ(format_metrics(finetune_run(f.ds, f.pretrained, f.vocab, c).rows),
              format_metrics(finetune_run(f.ds, f.pretrained, f.vocab, c).rows));
  }
}

TEST(FinetuneTest, ThreadCountDoesNotChangeMetrics) {
  const Fixture f = make_fixture(150);
  RunConfig c = small_config(Regime::kMolcpt);
  c.seeds = { 4 };
  const std::string one = format_metrics(finetune_run(f.ds, f.pretrained, f.vocab, c).rows);
  c.threads = 3;
  EXPECT_EQ(format_metrics(finetune_run(f.ds, f.pretrained, f.vocab, c).rows), one);
}

TEST(FinetuneTest, SelectionFollowsValidationRows) {
  const Fixture f = make_fixture();
  const RunConfig c = small_config(Regime::kFrozen);
  const RunResult res = finetune_run(f.ds, f.pretrained, f.vocab, c);
  const std::size_t per_seed = (c.epochs + 1) * 3 + 2;
  ASSERT_EQ(res.rows.size(), per_seed * c.seeds.size() + 2);
  std::vector<double> tests;
  for (std::size_t s = 0; s < c.seeds.size(); ++s) {
    // Earliest epoch with the highest validation AUC, read off the rows.
    std::optional<double> best;
    std::size_t best_epoch = 0;
    std::optional<double> test_at_best;
    for (std::size_t e = 0; e <= c.epochs; ++e) {
      const MetricRow &valid = res.rows[s * per_seed + e * 3 + 1];
      const MetricRow &test = res.rows[s * per_seed + e * 3 + 2];
      ASSERT_EQ(valid.split, "valid");
      ASSERT_EQ(valid.epoch, std::to_string(e));
      ASSERT_TRUE(valid.roc_auc.has_value());
      if (!best || *valid.roc_auc > *best) {
        best = valid.roc_auc;
        best_epoch = e;
        test_at_best = test.roc_auc;
      }
    }
    EXPECT_EQ(res.seeds[s].best_epoch, best_epoch);
    EXPECT_EQ(res.seeds[s].best_valid_auc, best);
    EXPECT_EQ(res.seeds[s].test_auc, test_at_best);
    EXPECT_EQ(res.rows[s * per_seed + per_seed - 1].epoch, "best");
    tests.push_back(*test_at_best);
  }
  EXPECT_DOUBLE_EQ(res.test.mean, (tests[0] + tests[1]) / 2);
  EXPECT_EQ(res.rows.back().epoch, "std");
  EXPECT_EQ(res.rows[res.rows.size() - 2].roc_auc, res.test.mean);
}

TEST(FinetuneTest, ScoresReproduceReportedAuc) {
  const Fixture f = make_fixture();
  for (Regime r: { Regime::kZeroshot, Regime::kFrozen }) {
    RunConfig c = small_config(r);
    c.seeds = { 2 };
    const RunResult res = finetune_run(f.ds, f.pretrained, f.vocab, c);
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i: f.ds.split.test) {
      scores.push_back(score_molecule(f.ds.records[i].graph, res.model, f.vocab, r)[0]);
      labels.push_back(f.ds.records[i].labels[0]);
    }
    const std::optional<double> auc = roc_auc(scores, labels);
    ASSERT_TRUE(auc.has_value());
    EXPECT_NEAR(*auc, *res.seeds[0].test_auc, 1e-12) << regime_name(r);
  }
}

TEST(FinetuneTest, VocabularyMismatchIsRejected) {
  Fixture f = make_fixture();
  f.pretrained.vocab_hash = f.vocab.hash() ^ 1;
  try {
    finetune_run(f.ds, f.pretrained, f.vocab, small_config(Regime::kFrozen));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.category(), ErrorCategory::kCheckpoint);
  }
}

TEST(FinetuneTest, RuleSetMismatchIsRejected) {
  Fixture f = make_fixture();
  f.pretrained.vocab_hash = f.vocab.hash();
  f.pretrained.rules = RuleSet::kBrics16;
  try {
    finetune_run(f.ds, f.pretrained, f.vocab, small_config(Regime::kZeroshot));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.category(), ErrorCategory::kCheckpoint);
  }
  f.pretrained.rules = RuleSet::kSimple;
  EXPECT_NO_THROW(finetune_run(f.ds, f.pretrained, f.vocab, small_config(Regime::kZeroshot)));
}

TEST(FinetuneTest, RejectsInvalidConfig) {
  const Fixture f = make_fixture();
  RunConfig c = small_config(Regime::kMolcpt);
  c.seeds.clear();
  EXPECT_THROW(finetune_run(f.ds, f.pretrained, f.vocab, c), Error);
  c = small_config(Regime::kMolcpt);
  c.lr = 0.0;
  EXPECT_THROW(finetune_run(f.ds, f.pretrained, f.vocab, c), Error);
  c = small_config(Regime::kMolcpt);
  c.prompt.heads = 3;
  EXPECT_THROW(finetune_run(f.ds, f.pretrained, f.vocab, c), Error);
}

// True when the aromatic-carbon subgraph has a component that is a 6-ring.
bool has_benzene_ring(const MolGraph &g) {
  auto kept = [&](std::size_t i) { return g.atom(i).aromatic && g.atom(i).element == 6; };
  std::vector<bool> removed;
  for (const Bond &b: g.bonds())
    removed.push_back(!kept(b.a) || !kept(b.b));
  const std::vector<std::size_t> comp = testing::components_union_find(g, removed);
  std::map<std::size_t, std::pair<int, int>> sizes;  // atoms, bonds
  for (std::size_t i = 0; i < g.num_atoms(); ++i)
    if (kept(i))
      ++sizes[comp[i]].first;
  for (std::size_t k = 0; k < g.num_bonds(); ++k)
    if (!removed[k])
      ++sizes[comp[g.bonds()[k].a]].second;
  for (const auto &[c, n]: sizes)
    if (n.first == 6 && n.second == 6)
      return true;
  return false;
}

TEST(PlantedDatasetTest, LabelIsMotifPresence) {
  const TaskDataset ds = planted_dataset({ .molecules = 200, .seed = 9 });
  ASSERT_EQ(ds.size(), 200);
  EXPECT_EQ(ds.task_names, (std::vector<std::string> { "has_motif" }));
  EXPECT_EQ(canonical_key(parse_smiles(kPlantedMotif)), canonical_key(parse_smiles("c1ccccc1")));
  int positives = 0;
  for (const Record &r: ds.records) {
    EXPECT_EQ(r.labels[0], has_benzene_ring(r.graph) ? 1 : 0);
    positives += r.labels[0];
  }
  EXPECT_EQ(positives, 100);
  EXPECT_EQ(planted_smiles({ .molecules = 50, .seed = 1 }), planted_smiles({ .molecules = 50, .seed = 1 }));
  EXPECT_NE(planted_smiles({ .molecules = 50, .seed = 1 }), planted_smiles({ .molecules = 50, .seed = 2 }));
}

TEST(MetricsFormatTest, HeaderAndFixedDecimals) {
  const std::vector<MetricRow> rows { { "0", "train", 0.5, 0.75 }, { "1", "valid", 1.0 / 3, std::nullopt } };
  EXPECT_EQ(format_metrics(rows),
            "epoch\tsplit\tloss\troc_auc\n0\ttrain\t0.500000\t0.750000\n1\tvalid\t0.333333\tnan\n");
  EXPECT_EQ(format_real(std::nullopt), "nan");
}

TEST(EvaluationThreadsTest, ReadsEnvironment) {
  EXPECT_EQ(evaluation_threads(4), 4);
  ::unsetenv("MOLCPT_THREADS");
  EXPECT_EQ(evaluation_threads(0), 1);
  ::setenv("MOLCPT_THREADS", "3", 1);
  EXPECT_EQ(evaluation_threads(0), 3);
  ::setenv("MOLCPT_THREADS", "many", 1);
  EXPECT_THROW(evaluation_threads(0), Error);
  ::unsetenv("MOLCPT_THREADS");
}

}  // namespace
}  // namespace molcpt
