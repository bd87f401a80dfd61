//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_PROMPT_H_
#define MOLCPT_PROMPT_H_

#include <cstddef>
#include <span>
#include <vector>

#include "molcpt/encoder.h"
#include "molcpt/fragment.h"
#include "molcpt/ndiff.h"

namespace molcpt {

class Rng;

struct PromptConfig {
  std::size_t heads = 2;
  // Adds attn + FFN(LayerNorm(attn)) after the attention output.
  bool feedforward = false;
  // Keeps EMPTY in the motif set even when other motifs match.
  bool include_empty = false;
  // Keeps the EMPTY row of the motif table at zero during training.
  bool freeze_empty = false;
};

// One trainable row per vocabulary entry; row 0 (EMPTY) starts at zero.
struct MotifTable {
  nd::Parameter rows;

  std::size_t size() const { return rows.value.rows(); }
  std::size_t dim() const { return rows.value.cols(); }
};

// Row j >= 1 is the encoder embedding of entry j's representative.
MotifTable init_motif_table(const MotifVocabulary &vocab,
                            const EncoderParams &encoder);
// Uniform Xavier rows except the zero EMPTY row.
MotifTable random_motif_table(std::size_t vocab_size, std::size_t dim, Rng &rng);

struct AttentionParams {
  std::size_t heads = 1;
  std::vector<nd::Parameter> wq;  // per head, d x d_h
  std::vector<nd::Parameter> wk;
  std::vector<nd::Parameter> wv;
  nd::Parameter wo;               // d x d
  // Present when the feedforward sublayer is enabled: d x d each.
  std::vector<nd::Parameter> ffn;

  static AttentionParams init(std::size_t dim, const PromptConfig &config, Rng &rng);

  std::size_t dim() const { return wo.value.rows(); }
  std::vector<nd::Parameter *> parameters();
  std::vector<const nd::Parameter *> parameters() const;
};

struct AttentionOutput {
  nd::Var e_cpt;                     // 1 x d
  std::vector<nd::Tensor> weights;   // per head, length n
};

// Multi-head attention of the stop-gradient molecule embedding (1 x d or d)
// over motif rows (n x d).
AttentionOutput cross_attention(nd::Var h_g, nd::Var motifs,
                                const AttentionParams &attn);

struct PromptEmbedding {
  nd::Var h_g;        // 1 x d
  nd::Var e_cpt;      // 1 x d
  nd::Var prompted;   // h_g + e_cpt
  std::vector<nd::Tensor> weights;
};

// Motif rows attended by a molecule with matched vocabulary indices: the
// matched set without EMPTY when non-empty, else {EMPTY}.
std::vector<std::size_t> attended_motifs(std::span<const std::size_t> matched,
                                         bool include_empty);

// h'_G = h_G + e_cpt for a molecule embedding h_g and its attended motifs.
PromptEmbedding prompt_embed(nd::Tape &tape, nd::Var h_g,
                             std::span<const std::size_t> motifs,
                             const MotifTable &table,
                             const AttentionParams &attn);

}  // namespace molcpt

#endif  // MOLCPT_PROMPT_H_
