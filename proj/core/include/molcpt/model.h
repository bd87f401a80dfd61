//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_MODEL_H_
#define MOLCPT_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "molcpt/answer.h"
#include "molcpt/checkpoint.h"
#include "molcpt/encoder.h"
#include "molcpt/fragment.h"
#include "molcpt/pretrain.h"
#include "molcpt/prompt.h"

namespace molcpt {

// Linear classifier on h_G for one task: logits = h W + b.
struct ProbeHead {
  nd::Parameter weight;  // d x 2
  nd::Parameter bias;    // 2

  static ProbeHead zeros(std::size_t dim, std::size_t task);
  nd::Var logits(nd::Tape &tape, nd::Var h) const;
};

// All trainable state of a run. A pretraining checkpoint fills only the
// encoder and head; fine-tuning adds the prompt, answers, and probes.
struct PromptModel {
  EncoderParams encoder;
  OutputHead head;
  bool has_prompt = false;
  PromptConfig prompt;
  MotifTable table;
  AttentionParams attention;
  std::vector<AnswerBank> banks;
  std::vector<ProbeHead> probes;
  RuleSet rules = RuleSet::kSimple;
  std::uint64_t vocab_hash = 0;
  std::uint64_t seed = 0;

  std::vector<nd::Parameter *> parameters();
};

Checkpoint to_checkpoint(const PromptModel &m);
PromptModel from_checkpoint(const Checkpoint &c);

}  // namespace molcpt

#endif  // MOLCPT_MODEL_H_
