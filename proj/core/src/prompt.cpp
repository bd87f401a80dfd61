//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/prompt.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "molcpt/error.h"
#include "molcpt/rng.h"

namespace molcpt {

using nd::Parameter;
using nd::Tape;
using nd::Tensor;
using nd::Var;

MotifTable init_motif_table(const MotifVocabulary &vocab,
                            const EncoderParams &encoder) {
  const std::size_t d = encoder.config.dim;
  Tensor rows({ vocab.size(), d });
  for (std::size_t j = 1; j < vocab.size(); ++j) {
    const MolGraph &rep = vocab[j].representative;
    if (rep.empty())
      throw Error(ErrorCategory::kData,
                  "vocabulary entry " + std::to_string(j) + " has no representative");
    const Tensor e = embed_graph(rep, encoder);
    if (e.size() != d)
      throw Error(ErrorCategory::kShape, "motif embedding dimension mismatch");
    std::copy(e.values().begin(), e.values().end(), &rows.values()[j * d]);
  }
  return { { "prompt.motifs", std::move(rows) } };
}

MotifTable random_motif_table(std::size_t vocab_size, std::size_t dim, Rng &rng) {
  Tensor rows = nd::xavier_uniform(vocab_size, dim, rng);
  std::fill_n(rows.values().begin(), dim, 0.0);
  return { { "prompt.motifs", std::move(rows) } };
}

AttentionParams AttentionParams::init(std::size_t dim, const PromptConfig &config,
                                      Rng &rng) {
  if (config.heads == 0 || dim % config.heads != 0)
    throw Error(ErrorCategory::kUsage,
                "dimension " + std::to_string(dim) + " is not divisible by "
                    + std::to_string(config.heads) + " heads");
  const std::size_t dh = dim / config.heads;
  AttentionParams a;
  a.heads = config.heads;
  for (std::size_t h = 0; h < config.heads; ++h) {
    const std::string s = std::to_string(h);
    a.wq.push_back({ "prompt.wq." + s, nd::xavier_uniform(dim, dh, rng) });
    a.wk.push_back({ "prompt.wk." + s, nd::xavier_uniform(dim, dh, rng) });
    a.wv.push_back({ "prompt.wv." + s, nd::xavier_uniform(dim, dh, rng) });
  }
  a.wo = { "prompt.wo", nd::xavier_uniform(dim, dim, rng) };
  if (config.feedforward) {
    a.ffn.push_back({ "prompt.ffn.0", nd::xavier_uniform(dim, dim, rng) });
    a.ffn.push_back({ "prompt.ffn.1", nd::xavier_uniform(dim, dim, rng) });
  }
  return a;
}

std::vector<Parameter *> AttentionParams::parameters() {
  std::vector<Parameter *> out;
  for (std::size_t h = 0; h < heads; ++h) {
    out.push_back(&wq[h]);
    out.push_back(&wk[h]);
    out.push_back(&wv[h]);
  }
  out.push_back(&wo);
  for (Parameter &p: ffn)
    out.push_back(&p);
  return out;
}

std::vector<const Parameter *> AttentionParams::parameters() const {
  std::vector<const Parameter *> out;
  for (std::size_t h = 0; h < heads; ++h) {
    out.push_back(&wq[h]);
    out.push_back(&wk[h]);
    out.push_back(&wv[h]);
  }
  out.push_back(&wo);
  for (const Parameter &p: ffn)
    out.push_back(&p);
  return out;
}

AttentionOutput cross_attention(Var h_g, Var motifs, const AttentionParams &attn) {
  Tape &tape = *h_g.tape();
  const std::size_t d = attn.dim();
  if (h_g.value().size() != d)
    throw Error(ErrorCategory::kShape,
                "cross_attention: query has " + std::to_string(h_g.value().size())
                    + " entries, expected " + std::to_string(d));
  if (motifs.value().rank() != 2 || motifs.shape()[1] != d || motifs.shape()[0] == 0)
    throw Error(ErrorCategory::kShape, "cross_attention: motif rows must be n x "
                                           + std::to_string(d) + " with n >= 1");

  // The attention path must not send gradient into the molecule embedding.
  Var query = nd::stop_gradient(nd::reshape(h_g, { 1, d }));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d / attn.heads));

  AttentionOutput out;
  std::vector<Var> heads;
  for (std::size_t h = 0; h < attn.heads; ++h) {
    Var q = nd::matmul(query, tape.param(attn.wq[h]));
    Var k = nd::matmul(motifs, tape.param(attn.wk[h]));
    Var v = nd::matmul(motifs, tape.param(attn.wv[h]));
    Var alpha = nd::softmax(nd::scale(nd::matmul(q, nd::transpose(k)), scale));
    out.weights.push_back(alpha.value());
    heads.push_back(nd::matmul(alpha, v));
  }
  Var e = nd::matmul(nd::concat(heads, 1), tape.param(attn.wo));
  if (!attn.ffn.empty()) {
    Var hidden = nd::relu(nd::matmul(nd::standardize_rows(e), tape.param(attn.ffn[0])));
    e = nd::add(e, nd::matmul(hidden, tape.param(attn.ffn[1])));
  }
  out.e_cpt = e;
  return out;
}

std::vector<std::size_t> attended_motifs(std::span<const std::size_t> matched,
                                         bool include_empty) {
  std::vector<std::size_t> out;
  for (std::size_t j: matched)
    if (j != 0)
      out.push_back(j);
  if (out.empty() || include_empty)
    out.insert(out.begin(), 0);
  return out;
}

PromptEmbedding prompt_embed(Tape &tape, Var h_g, std::span<const std::size_t> motifs,
                             const MotifTable &table, const AttentionParams &attn) {
  const std::size_t d = attn.dim();
  if (table.dim() != d)
    throw Error(ErrorCategory::kShape, "motif table and attention dimensions differ");
  if (motifs.empty())
    throw Error(ErrorCategory::kData, "prompt_embed needs at least one motif row");
  for (std::size_t j: motifs)
    if (j >= table.size())
      throw Error(ErrorCategory::kData, "motif index " + std::to_string(j)
                                            + " outside the motif table");
  Var rows = nd::gather_rows(tape.param(table.rows),
                             std::vector<std::size_t>(motifs.begin(), motifs.end()));
  Var h = nd::reshape(h_g, { 1, d });
  AttentionOutput a = cross_attention(h, rows, attn);
  return { h, a.e_cpt, nd::add(h, a.e_cpt), std::move(a.weights) };
}

}  // namespace molcpt
