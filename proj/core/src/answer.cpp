//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/answer.h"

#include <algorithm>
#include <string>

#include "molcpt/error.h"
#include "molcpt/rng.h"

namespace molcpt {

using nd::Tape;
using nd::Tensor;
using nd::Var;

AnswerInit init_answers(const Tensor &outputs, std::span<const int> labels,
                        std::size_t ensemble, std::uint64_t seed,
                        std::size_t num_labels) {
  if (outputs.rank() != 2 || outputs.rows() != labels.size())
    throw Error(ErrorCategory::kShape, "init_answers: one output row per label expected");
  const std::size_t d = outputs.cols();
  Rng rng(seed);
  AnswerInit init;
  AnswerBank &bank = init.bank;
  bank.labels = num_labels;

  if (ensemble == 0) {
    bank.ensemble = 1;
    bank.rows = { "answer.rows", nd::xavier_uniform(num_labels, d, rng) };
    return init;
  }

  bank.ensemble = ensemble;
  Tensor rows({ num_labels * ensemble, d });
  for (std::size_t label = 0; label < num_labels; ++label) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == static_cast<int>(label))
        members.push_back(i);
    if (members.empty()) {
      init.empty_labels.push_back(label);
      continue;
    }
    rng.shuffle(members);

    std::vector<double> class_mean(d, 0.0);
    for (std::size_t i: members)
      for (std::size_t j = 0; j < d; ++j)
        class_mean[j] += outputs(i, j);
    for (double &x: class_mean)
      x /= static_cast<double>(members.size());

    for (std::size_t e = 0; e < ensemble; ++e) {
      std::vector<double> mean(d, 0.0);
      std::size_t count = 0;
      for (std::size_t p = e; p < members.size(); p += ensemble) {
        for (std::size_t j = 0; j < d; ++j)
          mean[j] += outputs(members[p], j);
        ++count;
      }
      for (std::size_t j = 0; j < d; ++j)
        rows(bank.row(label, e), j) =
            count == 0 ? class_mean[j] : mean[j] / static_cast<double>(count);
    }
  }
  bank.rows = { "answer.rows", std::move(rows) };
  return init;
}

Tensor practical_answer(const AnswerBank &bank, std::size_t label, AnswerMode mode,
                        Rng &rng) {
  if (label >= bank.labels)
    throw Error(ErrorCategory::kData, "unknown label " + std::to_string(label));
  const std::size_t d = bank.dim();
  Tensor out({ d });
  if (mode == AnswerMode::kTrain) {
    const std::size_t r = bank.row(label, rng.index(bank.ensemble));
    for (std::size_t j = 0; j < d; ++j)
      out[j] = bank.rows.value(r, j);
    return out;
  }
  for (std::size_t e = 0; e < bank.ensemble; ++e)
    for (std::size_t j = 0; j < d; ++j)
      out[j] += bank.rows.value(bank.row(label, e), j);
  for (double &x: out.values())
    x /= static_cast<double>(bank.ensemble);
  return out;
}

std::vector<std::size_t> sample_members(const AnswerBank &bank, std::size_t n,
                                        Rng &rng) {
  std::vector<std::size_t> out(n * bank.labels);
  for (std::size_t &m: out)
    m = rng.index(bank.ensemble);
  return out;
}

Var answer_scores(Tape &tape, Var outputs, const AnswerBank &bank, AnswerMode mode,
                  std::span<const std::size_t> members) {
  if (outputs.value().rank() != 2 || outputs.shape()[1] != bank.dim())
    throw Error(ErrorCategory::kShape,
                "answer_scores: outputs have dimension "
                    + std::to_string(outputs.value().cols()) + ", answers "
                    + std::to_string(bank.dim()));
  const std::size_t n = outputs.shape()[0];
  const std::size_t m = bank.labels * bank.ensemble;
  if (mode == AnswerMode::kTrain && members.size() != n * bank.labels)
    throw Error(ErrorCategory::kShape, "answer_scores: member count mismatch");

  // Similarity to every row, then a weighting that selects (train) or
  // averages (infer) each label's rows.
  Var sim = nd::matmul(outputs, nd::transpose(tape.param(bank.rows)));
  Tensor weight({ n, m });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t label = 0; label < bank.labels; ++label) {
      if (mode == AnswerMode::kTrain) {
        weight(i, bank.row(label, members[i * bank.labels + label])) = 1.0;
      } else {
        for (std::size_t e = 0; e < bank.ensemble; ++e)
          weight(i, bank.row(label, e)) = 1.0 / static_cast<double>(bank.ensemble);
      }
    }
  Tensor pool({ m, bank.labels });
  for (std::size_t label = 0; label < bank.labels; ++label)
    for (std::size_t e = 0; e < bank.ensemble; ++e)
      pool(bank.row(label, e), label) = 1.0;
  Var s = nd::matmul(nd::mul(sim, tape.constant(std::move(weight))),
                     tape.constant(std::move(pool)));
  return bank.tau == 1.0 ? s : nd::scale(s, 1.0 / bank.tau);
}

Var orthogonality_penalty(Tape &tape, const AnswerBank &bank) {
  Var y = nd::normalize_rows(tape.param(bank.rows));
  Var gram = nd::matmul(y, nd::transpose(y));
  return nd::frobenius_sq(
      nd::sub(gram, tape.constant(Tensor::identity(bank.rows.value.rows()))));
}

Var answer_loss(Tape &tape, Var scores, std::span<const std::size_t> labels,
                const AnswerBank &bank) {
  Var ce = nd::cross_entropy(scores, labels);
  if (bank.orth == 0.0)
    return ce;
  return nd::add(ce, nd::scale(orthogonality_penalty(tape, bank), bank.orth));
}

Prediction predict(std::span<const double> scores) {
  if (scores.empty())
    throw Error(ErrorCategory::kShape, "predict: empty score vector");
  Prediction p;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[p.label])
      p.label = i;
  p.score = scores.size() >= 2 ? scores[1] - scores[0] : scores[0];
  return p;
}

}  // namespace molcpt
