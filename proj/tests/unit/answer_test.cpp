//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/answer.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "molcpt/error.h"
#include "molcpt/rng.h"

namespace molcpt {
namespace {

using nd::Tape;
using nd::Tensor;
using nd::Var;

Tensor random_tensor(Rng &rng, std::size_t rows, std::size_t cols) {
  Tensor t({ rows, cols });
  for (double &x: t.values())
    x = rng.uniform(-1, 1);
  return t;
}

std::vector<double> row_of(const Tensor &t, std::size_t i) {
  std::vector<double> out;
  for (std::size_t j = 0; j < t.cols(); ++j)
    out.push_back(t(i, j));
  return out;
}

AnswerBank bank_from(Tensor rows, std::size_t labels, std::size_t ensemble) {
  AnswerBank b;
  b.labels = labels;
  b.ensemble = ensemble;
  b.rows = { "answer.rows", std::move(rows) };
  return b;
}

TEST(InitAnswersTest, SingleMemberIsClassMean) {
  Rng rng(0);
  const Tensor y = random_tensor(rng, 9, 3);
  const std::vector<int> labels { 0, 1, 1, 0, 1, 0, 0, 1, 1 };
  const AnswerInit init = init_answers(y, labels, 1, 7);
  ASSERT_EQ(init.bank.rows.value.rows(), 2);
  EXPECT_TRUE(init.empty_labels.empty());
  for (std::size_t label = 0; label < 2; ++label)
    for (std::size_t j = 0; j < 3; ++j) {
      double total = 0.0;
      int count = 0;
      for (std::size_t i = 0; i < 9; ++i)
        if (labels[i] == static_cast<int>(label)) {
          total += y(i, j);
          ++count;
        }
      EXPECT_NEAR(init.bank.rows.value(label, j), total / count, 1e-15);
    }
}

TEST(InitAnswersTest, TwoMembersOverTwoExamplesAreSingletons) {
  const Tensor y({ 4, 2 }, { 1, 2, 3, 4, 5, 6, 7, 8 });
  const std::vector<int> labels { 0, 0, 1, 1 };
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const AnswerBank b = init_answers(y, labels, 2, seed).bank;
    std::vector<std::vector<double>> zero { row_of(b.rows.value, b.row(0, 0)),
                                            row_of(b.rows.value, b.row(0, 1)) };
    std::vector<std::vector<double>> one { row_of(b.rows.value, b.row(1, 0)),
                                           row_of(b.rows.value, b.row(1, 1)) };
    std::sort(zero.begin(), zero.end());
    std::sort(one.begin(), one.end());
    EXPECT_EQ(zero, (std::vector<std::vector<double>> { { 1, 2 }, { 3, 4 } }));
    EXPECT_EQ(one, (std::vector<std::vector<double>> { { 5, 6 }, { 7, 8 } }));
  }
}

TEST(InitAnswersTest, IdenticalOutputsGiveIdenticalRows) {
  const Tensor y({ 6, 2 }, { 1, -1, 1, -1, 1, -1, 2, 3, 2, 3, 2, 3 });
  const AnswerBank b = init_answers(y, std::vector<int> { 0, 0, 0, 1, 1, 1 }, 4, 3).bank;
  for (std::size_t e = 0; e < 4; ++e) {
    EXPECT_EQ(row_of(b.rows.value, b.row(0, e)), (std::vector<double> { 1, -1 }));
    EXPECT_EQ(row_of(b.rows.value, b.row(1, e)), (std::vector<double> { 2, 3 }));
  }
}

TEST(InitAnswersTest, MissingLabelGetsZeroRowsAndIsReported) {
  const Tensor y({ 2, 2 }, { 1, 2, 3, 4 });
  const AnswerInit init = init_answers(y, std::vector<int> { 1, 1 }, 2, 0);
  EXPECT_EQ(init.empty_labels, (std::vector<std::size_t> { 0 }));
  EXPECT_EQ(row_of(init.bank.rows.value, 0), (std::vector<double> { 0, 0 }));
  EXPECT_EQ(row_of(init.bank.rows.value, 1), (std::vector<double> { 0, 0 }));
}

TEST(InitAnswersTest, ZeroEnsembleIsRandomSingleRow) {
  Rng rng(1);
  const Tensor y = random_tensor(rng, 4, 5);
  const AnswerBank b = init_answers(y, std::vector<int> { 0, 1, 0, 1 }, 0, 2, 3).bank;
  EXPECT_EQ(b.ensemble, 1);
  EXPECT_EQ(b.rows.value.rows(), 3);
  EXPECT_EQ(b.dim(), 5);
  EXPECT_EQ(b.rows.value, init_answers(y, std::vector<int> { 0, 1, 0, 1 }, 0, 2, 3).bank.rows.value);
}

TEST(PracticalAnswerTest, TrainSamplesRowsUniformly) {
  Tensor rows({ 8, 1 });
  for (std::size_t i = 0; i < 8; ++i)
    rows(i, 0) = static_cast<double>(i);
  const AnswerBank b = bank_from(rows, 2, 4);
  Rng rng(2);
  std::vector<int> counts(4, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const double v = practical_answer(b, 1, AnswerMode::kTrain, rng)[0];
    ASSERT_GE(v, 4.0);
    ++counts[static_cast<std::size_t>(v) - 4];
  }
  for (int c: counts)
    EXPECT_NEAR(static_cast<double>(c) / draws, 0.25, 0.02);
}

TEST(PracticalAnswerTest, InferAveragesAndSingleMemberModesAgree) {
  Rng rng(3);
  const AnswerBank b = bank_from(Tensor({ 4, 2 }, { 1, 2, 3, 6, 0, 0, 2, 2 }), 2, 2);
  EXPECT_EQ(practical_answer(b, 0, AnswerMode::kInfer, rng).values(), (std::vector<double> { 2, 4 }));
  EXPECT_EQ(practical_answer(b, 1, AnswerMode::kInfer, rng).values(), (std::vector<double> { 1, 1 }));
  const AnswerBank single = bank_from(random_tensor(rng, 2, 3), 2, 1);
  for (std::size_t label = 0; label < 2; ++label)
    EXPECT_EQ(practical_answer(single, label, AnswerMode::kTrain, rng),
              practical_answer(single, label, AnswerMode::kInfer, rng));
  EXPECT_THROW(practical_answer(b, 2, AnswerMode::kInfer, rng), Error);
}

TEST(AnswerScoresTest, MatchesLoopOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t labels = 2 + rng.index(2);
    const std::size_t ensemble = 1 + rng.index(3);
    const std::size_t n = 1 + rng.index(5);
    const std::size_t d = 1 + rng.index(4);
    AnswerBank b = bank_from(random_tensor(rng, labels * ensemble, d), labels, ensemble);
    b.tau = rng.uniform(0.2, 2.0);
    const Tensor y = random_tensor(rng, n, d);
    const std::vector<std::size_t> members = sample_members(b, n, rng);
    Tape tape;
    const Tensor train = answer_scores(tape, tape.constant(y), b, AnswerMode::kTrain, members).value();
    const Tensor infer = answer_scores(tape, tape.constant(y), b, AnswerMode::kInfer).value();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t label = 0; label < labels; ++label) {
        auto dot = [&](std::size_t r) {
          double s = 0.0;
          for (std::size_t j = 0; j < d; ++j)
            s += y(i, j) * b.rows.value(r, j);
          return s;
        };
        double avg = 0.0;
        for (std::size_t e = 0; e < ensemble; ++e)
          avg += dot(b.row(label, e)) / static_cast<double>(ensemble);
        const double chosen = dot(b.row(label, members[i * labels + label]));
        EXPECT_NEAR(train(i, label), chosen / b.tau, 1e-12);
        EXPECT_NEAR(infer(i, label), avg / b.tau, 1e-12);
      }
  }
}

TEST(AnswerLossTest, HandEvaluatedCrossEntropy) {
  // Scores (1, 2, 3) with label 2: CE = log(e + e^2 + e^3) - 3.
  const AnswerBank b = bank_from(Tensor({ 3, 1 }, { 1, 2, 3 }), 3, 1);
  Tape tape;
  const Var s = answer_scores(tape, tape.constant(Tensor({ 1, 1 }, { 1 })), b, AnswerMode::kInfer);
  const double loss = answer_loss(tape, s, std::vector<std::size_t> { 2 }, b).value().item();
  EXPECT_NEAR(loss, std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)) - 3.0, 1e-14);
}

TEST(AnswerLossTest, EqualAnswersGiveLogTwo) {
  Rng rng(5);
  const Tensor row = random_tensor(rng, 1, 4);
  Tensor rows({ 2, 4 });
  for (std::size_t j = 0; j < 4; ++j)
    rows(0, j) = rows(1, j) = row(0, j);
  const AnswerBank b = bank_from(rows, 2, 1);
  Tape tape;
  const Var s = answer_scores(tape, tape.constant(random_tensor(rng, 5, 4)), b, AnswerMode::kInfer);
  const double loss = answer_loss(tape, s, std::vector<std::size_t> { 0, 1, 1, 0, 1 }, b).value().item();
  EXPECT_NEAR(loss, std::log(2.0), 1e-14);
}

TEST(OrthogonalityTest, ZeroForOrthonormalAndScaleFree) {
  auto penalty = [](Tensor rows) {
    Tape tape;
    return orthogonality_penalty(tape, bank_from(std::move(rows), 2, 1)).value().item();
  };
  EXPECT_NEAR(penalty(Tensor({ 2, 3 }, { 1, 0, 0, 0, 1, 0 })), 0.0, 1e-15);
  // Parallel rows: the off-diagonal Gram entries are 1, so the penalty is 2
  // up to the normalization epsilon.
  EXPECT_NEAR(penalty(Tensor({ 2, 3 }, { 1, 1, 0, 3, 3, 0 })), 2.0, 1e-10);
  // Orthogonal but not unit rows still give zero after normalization.
  EXPECT_NEAR(penalty(Tensor({ 2, 3 }, { 4, 0, 0, 0, 0, 0.5 })), 0.0, 1e-15);
}

TEST(OrthogonalityTest, LossAddsWeightedPenalty) {
  Rng rng(6);
  AnswerBank b = bank_from(random_tensor(rng, 4, 3), 2, 2);
  const Tensor y = random_tensor(rng, 3, 3);
  const std::vector<std::size_t> labels { 0, 1, 1 };
  Tape tape;
  const Var s = answer_scores(tape, tape.constant(y), b, AnswerMode::kInfer);
  const double plain = answer_loss(tape, s, labels, b).value().item();
  b.orth = 0.25;
  const double with = answer_loss(tape, s, labels, b).value().item();
  EXPECT_NEAR(with - plain, 0.25 * orthogonality_penalty(tape, b).value().item(), 1e-14);
}

TEST(AnswerLossTest, GradientCheckWithPenalty) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    AnswerBank b = bank_from(random_tensor(rng, 6, 4), 2, 3);
    b.orth = 1e-1;
    b.tau = 0.5;
    const Tensor y = random_tensor(rng, 4, 4);
    const std::vector<std::size_t> members = sample_members(b, 4, rng);
    const std::vector<std::size_t> labels { 0, 1, 1, 0 };
    auto f = [&](Tape &tape) {
      const Var s = answer_scores(tape, tape.constant(y), b, AnswerMode::kTrain, members);
      return answer_loss(tape, s, labels, b);
    };
    std::vector<nd::Parameter *> params { &b.rows };
    EXPECT_LE(nd::grad_check(f, params), 1e-4);
    auto g = [&](Tape &tape, Var x) {
      return answer_loss(tape, answer_scores(tape, x, b, AnswerMode::kInfer), labels, b);
    };
    EXPECT_LE(nd::grad_check(g, y), 1e-4);
  }
}

TEST(PredictTest, ArgmaxAndScoreDifference) {
  EXPECT_EQ(predict(std::vector<double> { 0.2, 1.5 }).label, 1);
  EXPECT_DOUBLE_EQ(predict(std::vector<double> { 0.2, 1.5 }).score, 1.3);
  EXPECT_EQ(predict(std::vector<double> { 3.0, 3.0 }).label, 0);
  EXPECT_EQ(predict(std::vector<double> { 1.0, 4.0, 4.0 }).label, 1);
  EXPECT_THROW(predict(std::vector<double> {}), Error);
}

TEST(PredictTest, LabelInvariantToTemperature) {
  Rng rng(8);
  AnswerBank b = bank_from(random_tensor(rng, 6, 3), 3, 2);
  const Tensor y = random_tensor(rng, 20, 3);
  Tape tape;
  const Tensor s1 = answer_scores(tape, tape.constant(y), b, AnswerMode::kInfer).value();
  b.tau = 0.07;
  const Tensor s2 = answer_scores(tape, tape.constant(y), b, AnswerMode::kInfer).value();
  for (std::size_t i = 0; i < 20; ++i)
    EXPECT_EQ(predict(row_of(s1, i)).label, predict(row_of(s2, i)).label);
}

TEST(AnswerErrorsTest, RejectsShapeMismatches) {
  Rng rng(9);
  const AnswerBank b = bank_from(random_tensor(rng, 2, 3), 2, 1);
  Tape tape;
  EXPECT_THROW(answer_scores(tape, tape.constant(random_tensor(rng, 2, 4)), b, AnswerMode::kInfer), Error);
  EXPECT_THROW(answer_scores(tape, tape.constant(random_tensor(rng, 2, 3)), b, AnswerMode::kTrain,
                             std::vector<std::size_t> { 0 }),
               Error);
  EXPECT_THROW(init_answers(random_tensor(rng, 3, 2), std::vector<int> { 0, 1 }, 1, 0), Error);
}

}  // namespace
}  // namespace molcpt
