//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_ANSWER_H_
#define MOLCPT_ANSWER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "molcpt/ndiff.h"

namespace molcpt {

class Rng;

enum class AnswerMode {
  kTrain,
  kInfer,
};

// Answer vectors for one task: `labels` groups of `ensemble` rows each,
// stored label-major (row = label * ensemble + e).
struct AnswerBank {
  std::size_t labels = 2;
  std::size_t ensemble = 1;
  nd::Parameter rows;
  double orth = 0.0;
  double tau = 1.0;

  std::size_t dim() const { return rows.value.cols(); }
  std::size_t row(std::size_t label, std::size_t member) const {
    return label * ensemble + member;
  }
};

struct AnswerInit {
  AnswerBank bank;
  // Labels that had no examples and got zero rows.
  std::vector<std::size_t> empty_labels;
};

// outputs: n x d_ans head outputs of labeled training molecules. Each label's
// examples are shuffled by seed and dealt round-robin into `ensemble` groups;
// each row is its group's mean (the class mean when a group is empty).
// ensemble == 0 means one randomly initialized row per label.
AnswerInit init_answers(const nd::Tensor &outputs, std::span<const int> labels,
                        std::size_t ensemble, std::uint64_t seed,
                        std::size_t num_labels = 2);

// Train mode samples one of the label's rows; infer mode averages them.
nd::Tensor practical_answer(const AnswerBank &bank, std::size_t label,
                            AnswerMode mode, Rng &rng);

// Member index used by each (example, label) in train mode.
std::vector<std::size_t> sample_members(const AnswerBank &bank, std::size_t n,
                                        Rng &rng);

// Scores s = <answer(label), y'> / tau for a batch y' (n x d_ans); returns
// n x labels. Train mode uses `members` (n x labels, label-major per row);
// infer mode averages each label's rows.
nd::Var answer_scores(nd::Tape &tape, nd::Var outputs, const AnswerBank &bank,
                      AnswerMode mode,
                      std::span<const std::size_t> members = {});

// ||Y^ Y^T - I||_F^2 over the row-normalized answer matrix.
nd::Var orthogonality_penalty(nd::Tape &tape, const AnswerBank &bank);

// Mean cross-entropy of scores against labels plus orth * penalty.
nd::Var answer_loss(nd::Tape &tape, nd::Var scores,
                    std::span<const std::size_t> labels, const AnswerBank &bank);

struct Prediction {
  std::size_t label = 0;
  // s_1 - s_0 for binary tasks, the ranking statistic for ROC-AUC.
  double score = 0.0;
};

// Argmax with lowest-index tie-break.
Prediction predict(std::span<const double> scores);

}  // namespace molcpt

#endif  // MOLCPT_ANSWER_H_
